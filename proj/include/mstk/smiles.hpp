//
// mstk - Copyright 2026 The mstk Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MSTK_SMILES_HPP_
#define MSTK_SMILES_HPP_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mstk/molecule.hpp"

namespace mstk {

enum class TokenKind {
  kAtom,
  kNonAtom,
};

/// One token of the line notation. Atom tokens carry the index of the atom
/// they denote; the k-th atom token always has index k.
///
/// Hydrogens added by hydrogen expansion are atom tokens with text "H" and
/// `implicit_hydrogen` set. They follow their heavy atom directly and are not
/// part of the source text.
struct LineToken {
  TokenKind kind = TokenKind::kNonAtom;
  std::string text;
  std::optional<int> atom_index;
  bool implicit_hydrogen = false;

  bool is_atom() const { return kind == TokenKind::kAtom; }

  bool operator==(const LineToken &) const = default;
};

struct LineSequence {
  std::vector<LineToken> tokens;
  std::string source_text;

  int atom_count() const;
  /// Texts of the atom tokens in atom-index order.
  std::vector<std::string> atom_symbols() const;

  bool operator==(const LineSequence &) const = default;
};

struct SmilesOptions {
  /// Add implicit and bracket hydrogens as explicit atoms.
  bool expand_hydrogens = true;
};

struct ParsedSmiles {
  Molecule molecule;
  LineSequence sequence;
};

/// Parses the supported SMILES subset: organic-subset atoms (aromatic forms
/// included), bracket atoms with hydrogen count and charge, bond symbols
/// `- = # :`, branches and ring closures (`1`..`9`, `%nn`).
///
/// Aromatic atoms are kekulized, so the resulting graph holds only single,
/// double and triple bonds (plus kAromatic for explicit ':' between
/// non-aromatic atoms). Throws SmilesError carrying a byte offset.
ParsedSmiles parse_smiles(std::string_view text, const SmilesOptions &opts = {});

/// Concatenates the texts of all non-implicit tokens.
std::string serialize(const LineSequence &seq);

/// Splits text into line-notation tokens without building a graph. No
/// hydrogen tokens are produced.
std::vector<LineToken> tokenize_smiles(std::string_view text);

/// Atom order that aligns `mol` with `seq`: `order[k]` is the index in `mol`
/// of the atom denoted by the k-th atom token.
///
/// Without an explicit mapping the molecule must already be in line order
/// (identity). An explicit mapping is validated for being a permutation with
/// matching elements. Throws mstk::Error on misalignment.
AtomOrder canonical_atom_order(const Molecule &mol, const LineSequence &seq,
                               std::optional<std::span<const int>> mapping =
                                   std::nullopt);

struct WrittenSmiles {
  std::string smiles;
  /// `order[k]` is the index in the input molecule of line atom k, matching
  /// parse_smiles(smiles) with hydrogen expansion.
  AtomOrder order;
};

/// Writes a SMILES string for a hydrogen-explicit molecule by depth-first
/// traversal from atom 0 (or the first heavy atom). Hydrogens attached to a
/// heavy atom are folded into it; atoms whose hydrogen count differs from the
/// organic-subset default are written as bracket atoms.
WrittenSmiles write_smiles(const Molecule &mol);

/// Line-ordered molecule plus its token stream, ready for encoding.
struct LineMolecule {
  Molecule molecule; ///< atoms in line order, conformer if known
  LineSequence sequence;
};

/// Orders a molecule by writing and re-reading its line notation. Bonds are
/// inferred first when the molecule has none.
LineMolecule line_molecule(const Molecule &mol);

} // namespace mstk

#endif // MSTK_SMILES_HPP_
