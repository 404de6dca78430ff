//
// mstk - Copyright 2026 The mstk Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MSTK_VOCAB_HPP_
#define MSTK_VOCAB_HPP_

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mstk/frames.hpp"
#include "mstk/molecule.hpp"
#include "mstk/smiles.hpp"
#include "mstk/vq.hpp"

namespace mstk {

/// Code carried by non-atom tokens; never a codebook index.
constexpr int kNonAtomCode = -1;

/// Characters used to spell condition scalars.
constexpr std::array<char, 12> kConditionAlphabet = {
  '0', '1', '2', '3', '4', '5', '6', '7', '8', '9', '.', '-'
};
constexpr int kSpecialCount = 3;

struct StructEntry {
  std::string symbol;
  int code = kNonAtomCode;

  bool is_atom() const { return code != kNonAtomCode; }
  bool operator==(const StructEntry &) const = default;
};

using StructSequence = std::vector<StructEntry>;

enum class VocabEntryKind {
  kAtom,
  kNonAtom,
  kCondition,
  kSpecial,
};

struct VocabEntry {
  VocabEntryKind kind;
  std::string symbol; ///< "<bos>", "<eos>", "<pad>" for specials
  int code = kNonAtomCode;

  bool operator==(const VocabEntry &) const = default;
};

/// Ids: atom symbols major and codes minor, then non-atom symbols, then the
/// condition alphabet, then BOS, EOS, PAD.
class Vocab {
public:
  /// Throws mstk::Error on duplicates, empty sets or K < 1.
  Vocab(std::vector<std::string> atom_symbols, int structural_size,
        std::vector<std::string> non_atom_symbols);

  int size() const { return static_cast<int>(entries_.size()); }
  int structural_size() const { return k_; }
  const std::vector<std::string> &atom_symbols() const { return atoms_; }
  const std::vector<std::string> &non_atom_symbols() const { return non_atoms_; }

  /// Throws mstk::Error for an unknown symbol or a code outside [0, K).
  int atom_id(std::string_view symbol, int code) const;
  int non_atom_id(std::string_view symbol) const;
  int condition_id(char c) const;
  /// (symbol, -1) is a non-atom; anything else an atom.
  int id(const StructEntry &e) const;
  int bos() const { return base_special_; }
  int eos() const { return base_special_ + 1; }
  int pad() const { return base_special_ + 2; }

  /// Throws mstk::Error when `id` is out of vocabulary.
  const VocabEntry &entry(int id) const;

  std::string to_json(int indent = 2) const;
  static Vocab from_json(std::string_view text);

  bool operator==(const Vocab &o) const { return entries_ == o.entries_; }

private:
  std::vector<std::string> atoms_;
  std::vector<std::string> non_atoms_;
  int k_;
  std::map<std::string, int, std::less<>> atom_index_;
  std::map<std::string, int, std::less<>> non_atom_index_;
  int base_non_atom_ = 0;
  int base_condition_ = 0;
  int base_special_ = 0;
  std::vector<VocabEntry> entries_;
};

Vocab build_vocab(std::vector<std::string> atom_symbols, int structural_size,
                  std::vector<std::string> non_atom_symbols);

/// Pairs each token of `seq` with its code (atoms) or -1 (non-atoms).
StructSequence to_struct_sequence(const LineSequence &seq,
                                  std::span<const int> codes);

/// Fixed two-decimal rendering; "-" only for negatives. Throws on NaN/Inf.
std::vector<char> tokenize_condition(double c);

/// [BOS, condition digits..., entries..., EOS].
std::vector<int> encode_sequence(const StructSequence &seq, const Vocab &vocab,
                                 std::optional<double> condition = {});
std::vector<int> encode_sequence(const LineSequence &seq,
                                 std::span<const int> codes,
                                 const Vocab &vocab,
                                 std::optional<double> condition = {});

struct DecodedIds {
  StructSequence sequence;
  std::string condition; ///< digits as written, empty when absent
};

/// Inverse of encode_sequence. PAD after EOS is allowed; throws mstk::Error
/// on missing framing, misplaced tokens or out-of-vocabulary ids.
DecodedIds decode_sequence(std::span<const int> ids, const Vocab &vocab);

/// `symbol:code` fields separated by spaces, optional leading `cond=<value>`.
std::string format_struct_line(const StructSequence &seq,
                               std::optional<double> condition = {});
struct StructLine {
  StructSequence sequence;
  std::optional<double> condition;
};
StructLine parse_struct_line(std::string_view line);

/// Line-notation text of a struct sequence: expanded hydrogens (symbol "H")
/// are dropped, all other symbols concatenated.
std::string line_text(const StructSequence &seq);

StructSequence structure_to_sequence(const LineMolecule &lm,
                                     const Quantizer &quantizer);

/// Parses the line text, decodes each atom's code into a generation
/// descriptor and places atoms with the quantizer's frame strategy.
/// Understanding slots of the decoded descriptors are not used.
LineMolecule sequence_to_structure(const StructSequence &seq,
                                   const Quantizer &quantizer);
LineMolecule sequence_to_structure(std::span<const int> ids,
                                   const Vocab &vocab,
                                   const Quantizer &quantizer);

/// Atom symbols (token texts, "H" for expanded hydrogens) and non-atom
/// symbols that occur in `seqs`, each sorted.
std::pair<std::vector<std::string>, std::vector<std::string>>
collect_symbols(std::span<const LineSequence> seqs);

/// Branches, bond symbols and ring digits 1-9.
std::vector<std::string> default_non_atom_symbols();

} // namespace mstk

#endif // MSTK_VOCAB_HPP_
