//
// mstk - Copyright 2026 The mstk Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MSTK_ERROR_HPP_
#define MSTK_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mstk {

class Error: public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Structure-file parse failure; `line()` is 1-based.
class FileParseError: public Error {
public:
  FileParseError(const std::string &msg, std::size_t line)
      : Error(msg + " (line " + std::to_string(line) + ")"), line_(line) { }

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

enum class SmilesErrorKind {
  kSyntax,
  kUnknownSymbol,
  kUnbalancedParen,
  kUnclosedRing,
  kValenceOverflow,
  kKekulization,
  kDisconnected,
};

/// Line-notation parse failure; `offset()` is a 0-based byte offset into the
/// input.
class SmilesError: public Error {
public:
  SmilesError(SmilesErrorKind kind, const std::string &msg, std::size_t offset)
      : Error(msg + " at offset " + std::to_string(offset)), kind_(kind),
        offset_(offset) { }

  SmilesErrorKind kind() const noexcept { return kind_; }
  std::size_t offset() const noexcept { return offset_; }

private:
  SmilesErrorKind kind_;
  std::size_t offset_;
};

/// Frame construction failed while placing or encoding `atom()`.
class GeometryError: public Error {
public:
  GeometryError(const std::string &msg, int atom)
      : Error(msg + " (atom " + std::to_string(atom) + ")"), atom_(atom) { }

  int atom() const noexcept { return atom_; }

private:
  int atom_;
};

} // namespace mstk

#endif // MSTK_ERROR_HPP_
