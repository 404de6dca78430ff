//
// mstk - Copyright 2026 The mstk Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mstk/vocab.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>

#include <json.hpp>

#include "mstk/descriptors.hpp"
#include "mstk/error.hpp"

namespace mstk {

namespace {

const char *const kSpecialNames[kSpecialCount] = { "<bos>", "<eos>", "<pad>" };

void index_symbols(const std::vector<std::string> &syms, const char *what,
                   std::map<std::string, int, std::less<>> &index) {
  if (syms.empty())
    throw Error(std::string("vocabulary needs at least one ") + what
                + " symbol");
  for (std::size_t i = 0; i < syms.size(); ++i) {
    if (syms[i].empty())
      throw Error(std::string("empty ") + what + " symbol");
    if (!index.emplace(syms[i], static_cast<int>(i)).second)
      throw Error(std::string("duplicate ") + what + " symbol \"" + syms[i]
                  + "\"");
  }
}

} // namespace

Vocab::Vocab(std::vector<std::string> atom_symbols, int structural_size,
             std::vector<std::string> non_atom_symbols)
    : atoms_(std::move(atom_symbols)), non_atoms_(std::move(non_atom_symbols)),
      k_(structural_size) {
  if (k_ < 1)
    throw Error("structural vocabulary size must be at least 1");
  index_symbols(atoms_, "atom", atom_index_);
  index_symbols(non_atoms_, "non-atom", non_atom_index_);

  for (const std::string &a: atoms_)
    for (int c = 0; c < k_; ++c)
      entries_.push_back({ VocabEntryKind::kAtom, a, c });
  base_non_atom_ = static_cast<int>(entries_.size());
  for (const std::string &b: non_atoms_)
    entries_.push_back({ VocabEntryKind::kNonAtom, b, kNonAtomCode });
  base_condition_ = static_cast<int>(entries_.size());
  for (char c: kConditionAlphabet)
    entries_.push_back({ VocabEntryKind::kCondition, std::string(1, c),
                         kNonAtomCode });
  base_special_ = static_cast<int>(entries_.size());
  for (const char *s: kSpecialNames)
    entries_.push_back({ VocabEntryKind::kSpecial, s, kNonAtomCode });
}

int Vocab::atom_id(std::string_view symbol, int code) const {
  auto it = atom_index_.find(symbol);
  if (it == atom_index_.end())
    throw Error("atom symbol \"" + std::string(symbol)
                + "\" is not in the vocabulary");
  if (code < 0 || code >= k_)
    throw Error("structural code " + std::to_string(code)
                + " out of range [0, " + std::to_string(k_) + ")");
  return it->second * k_ + code;
}

int Vocab::non_atom_id(std::string_view symbol) const {
  auto it = non_atom_index_.find(symbol);
  if (it == non_atom_index_.end())
    throw Error("non-atom symbol \"" + std::string(symbol)
                + "\" is not in the vocabulary");
  return base_non_atom_ + it->second;
}

int Vocab::condition_id(char c) const {
  auto it = std::find(kConditionAlphabet.begin(), kConditionAlphabet.end(), c);
  if (it == kConditionAlphabet.end())
    throw Error(std::string("'") + c + "' is not a condition character");
  return base_condition_
         + static_cast<int>(it - kConditionAlphabet.begin());
}

int Vocab::id(const StructEntry &e) const {
  return e.is_atom() ? atom_id(e.symbol, e.code) : non_atom_id(e.symbol);
}

const VocabEntry &Vocab::entry(int id) const {
  if (id < 0 || id >= size())
    throw Error("token id " + std::to_string(id) + " is out of vocabulary (size "
                + std::to_string(size()) + ")");
  return entries_[id];
}

std::string Vocab::to_json(int indent) const {
  nlohmann::json j;
  j["structural_size"] = k_;
  j["atom_symbols"] = atoms_;
  j["non_atom_symbols"] = non_atoms_;
  j["size"] = size();
  nlohmann::json table = nlohmann::json::array();
  for (int i = 0; i < size(); ++i) {
    const VocabEntry &e = entries_[i];
    const char *kind = e.kind == VocabEntryKind::kAtom      ? "atom"
                       : e.kind == VocabEntryKind::kNonAtom ? "non_atom"
                       : e.kind == VocabEntryKind::kCondition
                           ? "condition"
                           : "special";
    table.push_back(
        { { "id", i }, { "kind", kind }, { "symbol", e.symbol },
          { "code", e.code } });
  }
  j["ids"] = std::move(table);
  return j.dump(indent);
}

Vocab Vocab::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    Vocab v(j.at("atom_symbols").get<std::vector<std::string>>(),
            j.at("structural_size").get<int>(),
            j.at("non_atom_symbols").get<std::vector<std::string>>());
    // The id table is redundant with the symbol lists; reject drift.
    if (j.contains("ids")) {
      const auto &ids = j.at("ids");
      if (static_cast<int>(ids.size()) != v.size())
        throw Error("vocabulary id table does not match its symbol lists");
      for (const auto &row: ids) {
        const int id = row.at("id").get<int>();
        const VocabEntry &e = v.entry(id);
        if (row.at("symbol").get<std::string>() != e.symbol
            || row.at("code").get<int>() != e.code)
          throw Error("vocabulary id table does not match its symbol lists");
      }
    }
    return v;
  } catch (const nlohmann::json::exception &e) {
    throw Error(std::string("bad vocabulary JSON: ") + e.what());
  }
}

Vocab build_vocab(std::vector<std::string> atom_symbols, int structural_size,
                  std::vector<std::string> non_atom_symbols) {
  return Vocab(std::move(atom_symbols), structural_size,
               std::move(non_atom_symbols));
}

StructSequence to_struct_sequence(const LineSequence &seq,
                                  std::span<const int> codes) {
  if (static_cast<int>(codes.size()) != seq.atom_count())
    throw Error("got " + std::to_string(codes.size()) + " codes for "
                + std::to_string(seq.atom_count()) + " atom tokens");
  StructSequence out;
  out.reserve(seq.tokens.size());
  for (const LineToken &t: seq.tokens) {
    if (t.is_atom()) {
      const int c = codes[*t.atom_index];
      if (c < 0)
        throw Error("atom code must be nonnegative");
      out.push_back({ t.text, c });
    } else {
      out.push_back({ t.text, kNonAtomCode });
    }
  }
  return out;
}

std::vector<char> tokenize_condition(double c) {
  if (!std::isfinite(c))
    throw Error("condition value must be finite");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", c);
  std::string s(buf);
  if (s == "-0.00")
    s = "0.00";
  return { s.begin(), s.end() };
}

std::vector<int> encode_sequence(const StructSequence &seq, const Vocab &vocab,
                                 std::optional<double> condition) {
  std::vector<int> ids { vocab.bos() };
  if (condition)
    for (char c: tokenize_condition(*condition))
      ids.push_back(vocab.condition_id(c));
  for (const StructEntry &e: seq)
    ids.push_back(vocab.id(e));
  ids.push_back(vocab.eos());
  return ids;
}

std::vector<int> encode_sequence(const LineSequence &seq,
                                 std::span<const int> codes,
                                 const Vocab &vocab,
                                 std::optional<double> condition) {
  return encode_sequence(to_struct_sequence(seq, codes), vocab, condition);
}

DecodedIds decode_sequence(std::span<const int> ids, const Vocab &vocab) {
  DecodedIds out;
  if (ids.empty() || ids.front() != vocab.bos())
    throw Error("token sequence must start with BOS");
  std::size_t i = 1;
  while (i < ids.size()
         && vocab.entry(ids[i]).kind == VocabEntryKind::kCondition)
    out.condition += vocab.entry(ids[i++]).symbol;
  bool ended = false;
  for (; i < ids.size(); ++i) {
    const VocabEntry &e = vocab.entry(ids[i]);
    if (ended) {
      if (ids[i] != vocab.pad())
        throw Error("only padding may follow EOS");
      continue;
    }
    switch (e.kind) {
    case VocabEntryKind::kAtom:
    case VocabEntryKind::kNonAtom:
      out.sequence.push_back({ e.symbol, e.code });
      break;
    case VocabEntryKind::kCondition:
      throw Error("condition digit after the first structure token (position "
                  + std::to_string(i) + ")");
    case VocabEntryKind::kSpecial:
      if (ids[i] != vocab.eos())
        throw Error("unexpected special token at position "
                    + std::to_string(i));
      ended = true;
      break;
    }
  }
  if (!ended)
    throw Error("token sequence is missing EOS");
  return out;
}

std::string format_struct_line(const StructSequence &seq,
                               std::optional<double> condition) {
  std::string out;
  if (condition) {
    auto digits = tokenize_condition(*condition);
    out += "cond=" + std::string(digits.begin(), digits.end());
  }
  for (const StructEntry &e: seq) {
    if (!out.empty())
      out += ' ';
    out += e.symbol + ":" + std::to_string(e.code);
  }
  return out;
}

StructLine parse_struct_line(std::string_view line) {
  StructLine out;
  std::size_t pos = 0;
  bool first = true;
  while (pos < line.size()) {
    while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos])))
      ++pos;
    if (pos >= line.size())
      break;
    std::size_t end = pos;
    while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end])))
      ++end;
    std::string_view field = line.substr(pos, end - pos);
    pos = end;

    if (first && field.starts_with("cond=")) {
      std::string v(field.substr(5));
      std::size_t used = 0;
      double c = 0;
      try {
        c = std::stod(v, &used);
      } catch (const std::exception &) {
        used = 0;
      }
      if (used == 0 || used != v.size() || !std::isfinite(c))
        throw Error("bad condition field \"" + std::string(field) + "\"");
      out.condition = c;
      first = false;
      continue;
    }
    first = false;
    const std::size_t colon = field.rfind(':');
    if (colon == std::string_view::npos || colon == 0
        || colon + 1 == field.size())
      throw Error("bad token field \"" + std::string(field)
                  + "\" (expected symbol:code)");
    std::string_view num = field.substr(colon + 1);
    int code = 0;
    auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), code);
    if (ec != std::errc() || p != num.data() + num.size() || code < -1)
      throw Error("bad code in token field \"" + std::string(field) + "\"");
    out.sequence.push_back({ std::string(field.substr(0, colon)), code });
  }
  return out;
}

std::string line_text(const StructSequence &seq) {
  std::string s;
  for (const StructEntry &e: seq)
    if (!(e.is_atom() && e.symbol == "H"))
      s += e.symbol;
  return s;
}

StructSequence structure_to_sequence(const LineMolecule &lm,
                                     const Quantizer &quantizer) {
  std::vector<DescriptorVec> desc =
      molecule_descriptors(lm.molecule, quantizer.strategy());
  std::vector<int> codes = quantizer.encode_atoms(desc);
  return to_struct_sequence(lm.sequence, codes);
}

LineMolecule sequence_to_structure(const StructSequence &seq,
                                   const Quantizer &quantizer) {
  ParsedSmiles p = parse_smiles(line_text(seq));
  const auto &tokens = p.sequence.tokens;
  bool aligned = tokens.size() == seq.size();
  for (std::size_t i = 0; aligned && i < seq.size(); ++i)
    aligned = tokens[i].text == seq[i].symbol
              && tokens[i].is_atom() == seq[i].is_atom();
  if (!aligned)
    throw Error("token sequence does not match its line notation (hydrogen "
                "tokens must follow their heavy atom)");

  std::vector<SphericalCoord> coords;
  coords.reserve(p.molecule.num_atoms());
  for (const StructEntry &e: seq) {
    if (!e.is_atom())
      continue;
    auto [g, u] = split_descriptor(quantizer.decode_code(e.code));
    (void)u;
    coords.push_back(to_spherical(g));
  }
  if (!coords.empty())
    coords[0] = kAnchorCoord;
  Conformer x = decode_molecule(p.molecule, coords, quantizer.strategy());
  LineMolecule lm;
  lm.molecule = p.molecule.with_conformer(std::move(x));
  lm.sequence = std::move(p.sequence);
  return lm;
}

LineMolecule sequence_to_structure(std::span<const int> ids,
                                   const Vocab &vocab,
                                   const Quantizer &quantizer) {
  if (vocab.structural_size() != quantizer.size())
    throw Error("vocabulary and codebook disagree on the number of codes");
  return sequence_to_structure(decode_sequence(ids, vocab).sequence, quantizer);
}

std::pair<std::vector<std::string>, std::vector<std::string>>
collect_symbols(std::span<const LineSequence> seqs) {
  std::set<std::string> atoms, others;
  for (const LineSequence &s: seqs)
    for (const LineToken &t: s.tokens)
      (t.is_atom() ? atoms : others).insert(t.text);
  return { { atoms.begin(), atoms.end() }, { others.begin(), others.end() } };
}

std::vector<std::string> default_non_atom_symbols() {
  std::vector<std::string> b { "(", ")", "-", "=", "#", ":" };
  for (int d = 1; d <= 9; ++d)
    b.push_back(std::to_string(d));
  return b;
}

} // namespace mstk
