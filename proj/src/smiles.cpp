//
// mstk - Copyright 2026 The mstk Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mstk/smiles.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <functional>
#include <map>
#include <utility>

#include "mstk/elements.hpp"
#include "mstk/error.hpp"

namespace mstk {

int LineSequence::atom_count() const {
  return static_cast<int>(std::count_if(
      tokens.begin(), tokens.end(),
      [](const LineToken &t) { return t.is_atom(); }));
}

std::vector<std::string> LineSequence::atom_symbols() const {
  std::vector<std::string> out;
  for (const LineToken &t: tokens)
    if (t.is_atom())
      out.push_back(t.text);
  return out;
}

std::string serialize(const LineSequence &seq) {
  std::string out;
  for (const LineToken &t: seq.tokens)
    if (!t.implicit_hydrogen)
      out += t.text;
  return out;
}

namespace {

enum class LexKind {
  kAtom,
  kBond,
  kBranchOpen,
  kBranchClose,
  kRing,
};

struct LexAtom {
  int z = 0;
  bool aromatic = false;
  bool bracket = false;
  int hcount = 0;
  int charge = 0;
};

struct Lexeme {
  LexKind kind;
  std::string text;
  std::size_t offset;
  LexAtom atom;  // kAtom only
  int ring = 0;  // kRing only
};

[[noreturn]] void fail(SmilesErrorKind kind, const std::string &msg,
                       std::size_t offset) {
  throw SmilesError(kind, msg, offset);
}

bool is_aromatic_symbol(std::string_view s) {
  return s == "b" || s == "c" || s == "n" || s == "o" || s == "p" || s == "s"
         || s == "se" || s == "as";
}

int aromatic_z(std::string_view s) {
  std::string up(s);
  up[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(up[0])));
  return *atomic_number(up);
}

LexAtom lex_bracket(std::string_view body, std::size_t offset) {
  // body excludes the surrounding brackets; offset is that of '['.
  LexAtom a;
  a.bracket = true;
  std::size_t i = 0;
  if (i < body.size() && std::isdigit(static_cast<unsigned char>(body[i])))
    fail(SmilesErrorKind::kSyntax, "isotopes are not supported", offset + 1);

  // Element symbol: two-letter forms first.
  std::string_view sym;
  if (i + 1 < body.size()
      && is_aromatic_symbol(body.substr(i, 2))) {
    sym = body.substr(i, 2);
    a.aromatic = true;
  } else if (i < body.size() && is_aromatic_symbol(body.substr(i, 1))) {
    sym = body.substr(i, 1);
    a.aromatic = true;
  } else if (i < body.size()
             && std::isupper(static_cast<unsigned char>(body[i]))) {
    if (i + 1 < body.size()
        && std::islower(static_cast<unsigned char>(body[i + 1]))
        && atomic_number(body.substr(i, 2)))
      sym = body.substr(i, 2);
    else
      sym = body.substr(i, 1);
    if (!atomic_number(sym))
      fail(SmilesErrorKind::kUnknownSymbol,
           "unknown element \"" + std::string(sym) + "\"", offset + 1 + i);
  } else {
    fail(SmilesErrorKind::kUnknownSymbol, "expected element symbol",
         offset + 1 + i);
  }
  a.z = a.aromatic ? aromatic_z(sym) : *atomic_number(sym);
  i += sym.size();

  if (i < body.size() && body[i] == '@')
    fail(SmilesErrorKind::kSyntax, "stereo descriptors are not supported",
         offset + 1 + i);

  if (i < body.size() && body[i] == 'H') {
    ++i;
    a.hcount = 1;
    if (i < body.size() && std::isdigit(static_cast<unsigned char>(body[i]))) {
      a.hcount = body[i] - '0';
      ++i;
    }
  }

  if (i < body.size() && (body[i] == '+' || body[i] == '-')) {
    char sign = body[i];
    int mag = 1;
    ++i;
    if (i < body.size() && std::isdigit(static_cast<unsigned char>(body[i]))) {
      mag = body[i] - '0';
      ++i;
    } else {
      while (i < body.size() && body[i] == sign) {
        ++mag;
        ++i;
      }
    }
    a.charge = sign == '+' ? mag : -mag;
  }

  if (i != body.size())
    fail(SmilesErrorKind::kUnknownSymbol,
         "unexpected character '" + std::string(1, body[i])
             + "' in bracket atom",
         offset + 1 + i);
  return a;
}

std::vector<Lexeme> lex(std::string_view text) {
  std::vector<Lexeme> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    const std::size_t start = i;
    if (c == '[') {
      std::size_t close = text.find(']', i);
      if (close == std::string_view::npos)
        fail(SmilesErrorKind::kSyntax, "unterminated bracket atom", i);
      LexAtom a = lex_bracket(text.substr(i + 1, close - i - 1), i);
      out.push_back({ LexKind::kAtom,
                      std::string(text.substr(i, close - i + 1)), start, a });
      i = close + 1;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::string_view sym;
      LexAtom a;
      if (c == 'C' && i + 1 < text.size() && text[i + 1] == 'l')
        sym = text.substr(i, 2);
      else if (c == 'B' && i + 1 < text.size() && text[i + 1] == 'r')
        sym = text.substr(i, 2);
      else
        sym = text.substr(i, 1);
      static constexpr std::array<std::string_view, 10> kOrganic = {
        "B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"
      };
      static constexpr std::array<std::string_view, 6> kAromatic = {
        "b", "c", "n", "o", "p", "s"
      };
      if (std::find(kOrganic.begin(), kOrganic.end(), sym) != kOrganic.end()) {
        a.z = *atomic_number(sym);
      } else if (std::find(kAromatic.begin(), kAromatic.end(), sym)
                 != kAromatic.end()) {
        a.z = aromatic_z(sym);
        a.aromatic = true;
      } else {
        fail(SmilesErrorKind::kUnknownSymbol,
             "unknown symbol \"" + std::string(sym) + "\"", i);
      }
      a.hcount = -1;
      out.push_back({ LexKind::kAtom, std::string(sym), start, a });
      i += sym.size();
      continue;
    }
    switch (c) {
    case '-':
    case '=':
    case '#':
    case ':':
      out.push_back({ LexKind::kBond, std::string(1, c), start, {} });
      ++i;
      continue;
    case '(':
      out.push_back({ LexKind::kBranchOpen, "(", start, {} });
      ++i;
      continue;
    case ')':
      out.push_back({ LexKind::kBranchClose, ")", start, {} });
      ++i;
      continue;
    case '%': {
      if (i + 2 >= text.size()
          || !std::isdigit(static_cast<unsigned char>(text[i + 1]))
          || !std::isdigit(static_cast<unsigned char>(text[i + 2])))
        fail(SmilesErrorKind::kSyntax, "'%' must be followed by two digits",
             i);
      Lexeme lx { LexKind::kRing, std::string(text.substr(i, 3)), start, {} };
      lx.ring = (text[i + 1] - '0') * 10 + (text[i + 2] - '0');
      out.push_back(lx);
      i += 3;
      continue;
    }
    case '.':
      fail(SmilesErrorKind::kDisconnected,
           "multi-fragment input is not supported", i);
    case '/':
    case '\\':
      fail(SmilesErrorKind::kSyntax, "stereo bonds are not supported", i);
    default:
      break;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      Lexeme lx { LexKind::kRing, std::string(1, c), start, {} };
      lx.ring = c - '0';
      out.push_back(lx);
      ++i;
      continue;
    }
    fail(SmilesErrorKind::kUnknownSymbol,
         "unknown symbol '" + std::string(1, c) + "'", i);
  }
  return out;
}

struct PendingBond {
  int a;
  int b;
  char symbol;  // 0 for implicit
};

BondOrder order_for(char sym, bool both_aromatic) {
  switch (sym) {
  case '=':
    return BondOrder::kDouble;
  case '#':
    return BondOrder::kTriple;
  case ':':
    return BondOrder::kAromatic;
  case '-':
    return BondOrder::kSingle;
  default:
    return both_aromatic ? BondOrder::kAromatic : BondOrder::kSingle;
  }
}

std::span<const int> normal_valences(int z) {
  static constexpr int kB[] = { 3 }, kC[] = { 4 }, kN[] = { 3, 5 },
                       kO[] = { 2 }, kP[] = { 3, 5 }, kS[] = { 2, 4, 6 },
                       kHal[] = { 1 };
  switch (z) {
  case 5:
    return kB;
  case 6:
    return kC;
  case 7:
    return kN;
  case 8:
    return kO;
  case 15:
  case 33:
    return kP;
  case 16:
  case 34:
    return kS;
  case 9:
  case 17:
  case 35:
  case 53:
    return kHal;
  default:
    return {};
  }
}

int charged_valence(int z, int charge) {
  auto v = normal_valences(z);
  int base = v.empty() ? 4 : v.front();
  if ((z == 7 || z == 8 || z == 15 || z == 16 || z == 33 || z == 34)
      && charge > 0)
    return base + charge;
  return base - std::abs(charge);
}

// Chooses double bonds among aromatic bonds so that every atom in `need`
// gets exactly one. Returns false when no perfect assignment exists.
bool match_pi(const std::vector<std::vector<std::pair<int, int>>> &adj,
              std::vector<int> &mate, std::vector<char> &need) {
  int best = -1, best_opts = 1 << 30;
  for (int v = 0; v < static_cast<int>(need.size()); ++v) {
    if (!need[v] || mate[v] >= 0)
      continue;
    int opts = 0;
    for (auto [u, _]: adj[v])
      if (need[u] && mate[u] < 0)
        ++opts;
    if (opts < best_opts) {
      best = v;
      best_opts = opts;
    }
  }
  if (best < 0)
    return true;
  if (best_opts == 0)
    return false;
  for (auto [u, _]: adj[best]) {
    if (!need[u] || mate[u] >= 0)
      continue;
    mate[best] = u;
    mate[u] = best;
    if (match_pi(adj, mate, need))
      return true;
    mate[best] = mate[u] = -1;
  }
  return false;
}

} // namespace

std::vector<LineToken> tokenize_smiles(std::string_view text) {
  std::vector<LineToken> out;
  int next = 0;
  for (const Lexeme &lx: lex(text)) {
    LineToken t;
    t.text = lx.text;
    if (lx.kind == LexKind::kAtom) {
      t.kind = TokenKind::kAtom;
      t.atom_index = next++;
    }
    out.push_back(std::move(t));
  }
  return out;
}

ParsedSmiles parse_smiles(std::string_view text, const SmilesOptions &opts) {
  const std::vector<Lexeme> lexemes = lex(text);

  struct RingOpen {
    int atom;
    char symbol;
    std::size_t offset;
    std::size_t bond_offset;
  };

  std::vector<LexAtom> atoms;
  std::vector<std::size_t> atom_offset;
  std::vector<int> atom_lexeme;
  std::vector<PendingBond> bonds;
  std::vector<std::size_t> bond_offset;

  int prev = -1;
  char pending = 0;
  std::size_t pending_offset = 0;
  std::vector<std::pair<int, std::size_t>> branches;
  std::map<int, RingOpen> rings;
  std::optional<LexKind> last;

  auto add_bond = [&](int a, int b, char sym, std::size_t offset) {
    for (const PendingBond &pb: bonds)
      if ((pb.a == a && pb.b == b) || (pb.a == b && pb.b == a))
        fail(SmilesErrorKind::kSyntax, "duplicate bond", offset);
    bonds.push_back({ a, b, sym });
    bond_offset.push_back(offset);
  };

  for (int li = 0; li < static_cast<int>(lexemes.size()); ++li) {
    const Lexeme &lx = lexemes[li];
    switch (lx.kind) {
    case LexKind::kAtom: {
      int idx = static_cast<int>(atoms.size());
      if (prev < 0 && idx > 0)
        fail(SmilesErrorKind::kSyntax, "atom is not bonded to anything",
             lx.offset);
      if (prev < 0 && pending)
        fail(SmilesErrorKind::kSyntax, "bond without preceding atom",
             pending_offset);
      atoms.push_back(lx.atom);
      atom_offset.push_back(lx.offset);
      atom_lexeme.push_back(li);
      if (prev >= 0)
        add_bond(prev, idx, pending, pending ? pending_offset : lx.offset);
      pending = 0;
      prev = idx;
      break;
    }
    case LexKind::kBond:
      if (prev < 0)
        fail(SmilesErrorKind::kSyntax, "bond without preceding atom",
             lx.offset);
      if (pending)
        fail(SmilesErrorKind::kSyntax, "consecutive bond symbols", lx.offset);
      pending = lx.text[0];
      pending_offset = lx.offset;
      break;
    case LexKind::kBranchOpen:
      if (prev < 0)
        fail(SmilesErrorKind::kSyntax, "branch without preceding atom",
             lx.offset);
      if (pending)
        fail(SmilesErrorKind::kSyntax, "bond symbol before branch",
             pending_offset);
      branches.emplace_back(prev, lx.offset);
      break;
    case LexKind::kBranchClose:
      if (branches.empty())
        fail(SmilesErrorKind::kUnbalancedParen, "unbalanced parenthesis",
             lx.offset);
      if (pending)
        fail(SmilesErrorKind::kSyntax, "dangling bond symbol",
             pending_offset);
      if (last == LexKind::kBranchOpen)
        fail(SmilesErrorKind::kSyntax, "empty branch", lx.offset);
      prev = branches.back().first;
      branches.pop_back();
      break;
    case LexKind::kRing: {
      if (prev < 0)
        fail(SmilesErrorKind::kSyntax, "ring bond without preceding atom",
             lx.offset);
      if (last == LexKind::kBranchOpen)
        fail(SmilesErrorKind::kSyntax, "ring bond at branch start",
             lx.offset);
      auto it = rings.find(lx.ring);
      if (it == rings.end()) {
        rings[lx.ring] = { prev, pending, lx.offset,
                           pending ? pending_offset : lx.offset };
      } else {
        const RingOpen open = it->second;
        char sym = pending ? pending : open.symbol;
        if (pending && open.symbol && pending != open.symbol)
          fail(SmilesErrorKind::kSyntax, "conflicting ring bond symbols",
               pending_offset);
        if (open.atom == prev)
          fail(SmilesErrorKind::kSyntax, "ring bond to itself", lx.offset);
        add_bond(open.atom, prev, sym, lx.offset);
        rings.erase(it);
      }
      pending = 0;
      break;
    }
    }
    last = lx.kind;
  }

  if (pending)
    fail(SmilesErrorKind::kSyntax, "dangling bond symbol", pending_offset);
  if (!branches.empty())
    fail(SmilesErrorKind::kUnbalancedParen, "unbalanced parenthesis",
         branches.back().second);
  if (!rings.empty()) {
    auto first = std::min_element(rings.begin(), rings.end(),
                                  [](const auto &x, const auto &y) {
                                    return x.second.offset < y.second.offset;
                                  });
    fail(SmilesErrorKind::kUnclosedRing,
         "unclosed ring bond \""
             + (first->first < 10 ? std::to_string(first->first)
                                  : "%" + std::to_string(first->first))
             + "\"",
         first->second.offset);
  }

  // ------------------------------------------------------------ kekulize
  const int n = static_cast<int>(atoms.size());
  std::vector<BondOrder> orders(bonds.size());
  std::vector<char> aromatic_bond(bonds.size(), 0);
  for (std::size_t b = 0; b < bonds.size(); ++b) {
    const auto &pb = bonds[b];
    bool both = atoms[pb.a].aromatic && atoms[pb.b].aromatic;
    orders[b] = order_for(pb.symbol, both);
    aromatic_bond[b] = both && orders[b] == BondOrder::kAromatic;
  }

  std::vector<std::vector<std::pair<int, int>>> arom_adj(n);
  std::vector<int> sigma(n, 0);
  for (std::size_t b = 0; b < bonds.size(); ++b) {
    const auto &pb = bonds[b];
    int contrib = aromatic_bond[b] ? 1 : valence_contribution(orders[b]);
    sigma[pb.a] += contrib;
    sigma[pb.b] += contrib;
    if (aromatic_bond[b]) {
      arom_adj[pb.a].emplace_back(pb.b, static_cast<int>(b));
      arom_adj[pb.b].emplace_back(pb.a, static_cast<int>(b));
    }
  }

  std::vector<char> need(n, 0);
  bool any_aromatic = false;
  for (int i = 0; i < n; ++i) {
    const LexAtom &a = atoms[i];
    if (!a.aromatic)
      continue;
    any_aromatic = true;
    int target = a.bracket ? charged_valence(a.z, a.charge)
                           : (normal_valences(a.z).empty()
                                  ? 4
                                  : normal_valences(a.z).front());
    int used = sigma[i] + (a.bracket ? a.hcount : 0);
    need[i] = target - used >= 1;
  }
  if (any_aromatic) {
    std::vector<int> mate(n, -1);
    if (!match_pi(arom_adj, mate, need)) {
      int bad = 0;
      for (int i = 0; i < n; ++i)
        if (need[i] && mate[i] < 0) {
          bad = i;
          break;
        }
      fail(SmilesErrorKind::kKekulization, "cannot kekulize aromatic system",
           atom_offset[bad]);
    }
    for (std::size_t b = 0; b < bonds.size(); ++b) {
      if (!aromatic_bond[b])
        continue;
      const auto &pb = bonds[b];
      orders[b] =
          mate[pb.a] == pb.b ? BondOrder::kDouble : BondOrder::kSingle;
    }
  }

  // ------------------------------------------------------------ hydrogens
  std::vector<int> valence(n, 0);
  for (std::size_t b = 0; b < bonds.size(); ++b) {
    valence[bonds[b].a] += valence_contribution(orders[b]);
    valence[bonds[b].b] += valence_contribution(orders[b]);
  }
  std::vector<int> hydrogens(n, 0);
  for (int i = 0; i < n; ++i) {
    const LexAtom &a = atoms[i];
    if (a.bracket) {
      hydrogens[i] = a.hcount;
      continue;
    }
    auto allowed = normal_valences(a.z);
    auto fit = std::find_if(allowed.begin(), allowed.end(),
                            [&](int v) { return v >= valence[i]; });
    if (fit == allowed.end())
      fail(SmilesErrorKind::kValenceOverflow,
           "valence overflow on \"" + lexemes[atom_lexeme[i]].text + "\"",
           atom_offset[i]);
    hydrogens[i] = *fit - valence[i];
  }

  // ------------------------------------------------------------ assemble
  std::vector<int> final_index(n, -1);
  std::vector<Atom> out_atoms;
  std::vector<Bond> out_bonds;
  LineSequence seq;
  seq.source_text = std::string(text);

  int next = 0;
  int atom_counter = 0;
  for (const Lexeme &lx: lexemes) {
    LineToken t;
    t.text = lx.text;
    if (lx.kind != LexKind::kAtom) {
      seq.tokens.push_back(std::move(t));
      continue;
    }
    const int src = atom_counter++;
    const LexAtom &a = atoms[src];
    final_index[src] = next;
    t.kind = TokenKind::kAtom;
    t.atom_index = next++;
    seq.tokens.push_back(std::move(t));
    out_atoms.push_back(Atom::from_atomic_number(a.z, a.charge));
    if (!opts.expand_hydrogens)
      continue;
    for (int h = 0; h < hydrogens[src]; ++h) {
      LineToken ht;
      ht.kind = TokenKind::kAtom;
      ht.text = "H";
      ht.atom_index = next;
      ht.implicit_hydrogen = true;
      seq.tokens.push_back(std::move(ht));
      out_atoms.push_back(Atom::from_atomic_number(1));
      out_bonds.emplace_back(final_index[src], next, BondOrder::kSingle);
      ++next;
    }
  }
  for (std::size_t b = 0; b < bonds.size(); ++b)
    out_bonds.emplace_back(final_index[bonds[b].a], final_index[bonds[b].b],
                           orders[b]);

  return { Molecule(std::move(out_atoms), std::move(out_bonds)),
           std::move(seq) };
}

AtomOrder canonical_atom_order(const Molecule &mol, const LineSequence &seq,
                               std::optional<std::span<const int>> mapping) {
  const int n = mol.num_atoms();
  const auto symbols = seq.atom_symbols();
  if (static_cast<int>(symbols.size()) != n)
    throw Error("misaligned inputs: " + std::to_string(symbols.size())
                + " atom tokens for " + std::to_string(n) + " atoms");

  AtomOrder order(n);
  if (mapping) {
    if (static_cast<int>(mapping->size()) != n)
      throw Error("misaligned inputs: mapping length differs from atom count");
    std::copy(mapping->begin(), mapping->end(), order.begin());
  } else {
    for (int k = 0; k < n; ++k)
      order[k] = k;
  }

  std::vector<char> seen(n, 0);
  for (int k = 0; k < n; ++k) {
    int src = order[k];
    if (src < 0 || src >= n || seen[src])
      throw Error("misaligned inputs: mapping is not a permutation");
    seen[src] = 1;
    const std::string &tok = symbols[k];
    int z = mol.atom(src).atomic_number;
    int tok_z = 0;
    if (tok == "H") {
      tok_z = 1;
    } else {
      try {
        auto lexed = lex(tok);
        if (lexed.size() == 1 && lexed[0].kind == LexKind::kAtom)
          tok_z = lexed[0].atom.z;
      } catch (const SmilesError &) {
        tok_z = 0;
      }
    }
    if (tok_z != z)
      throw Error("misaligned inputs: line atom " + std::to_string(k) + " ("
                  + tok + ") does not match molecule atom "
                  + std::to_string(src) + " ("
                  + mol.atom(src).element_symbol + ")");
  }
  return order;
}

// ---------------------------------------------------------------- writer

namespace {
bool organic_subset(int z) {
  switch (z) {
  case 5:
  case 6:
  case 7:
  case 8:
  case 9:
  case 15:
  case 16:
  case 17:
  case 35:
  case 53:
    return true;
  default:
    return false;
  }
}

std::string bond_symbol(BondOrder order) {
  switch (order) {
  case BondOrder::kDouble:
    return "=";
  case BondOrder::kTriple:
    return "#";
  case BondOrder::kAromatic:
    return ":";
  default:
    return "";
  }
}

std::string ring_label(int d) {
  return d < 10 ? std::to_string(d) : "%" + std::to_string(d);
}
} // namespace

WrittenSmiles write_smiles(const Molecule &mol) {
  const int n = mol.num_atoms();
  WrittenSmiles out;
  if (n == 0)
    return out;
  mol.require_connected();

  // Hydrogens with a single non-hydrogen neighbor are folded into it.
  std::vector<char> folded(n, 0);
  for (int i = 0; i < n; ++i) {
    if (mol.atom(i).atomic_number != 1 || mol.neighbors(i).size() != 1)
      continue;
    int nb = mol.neighbors(i)[0];
    if (mol.atom(nb).atomic_number != 1)
      folded[i] = 1;
  }

  int root = 0;
  while (folded[root])
    ++root;

  // Pass 1: DFS tree over written atoms.
  std::vector<int> visit_order, parent(n, -1), rank(n, -1);
  std::vector<std::vector<int>> children(n);
  std::vector<std::pair<int, int>> ring_bonds;  // (opener, closer)
  std::function<void(int)> dfs = [&](int u) {
    rank[u] = static_cast<int>(visit_order.size());
    visit_order.push_back(u);
    for (int v: mol.neighbors(u)) {
      if (folded[v] || v == parent[u])
        continue;
      if (rank[v] < 0) {
        parent[v] = u;
        children[u].push_back(v);
        dfs(v);
      } else if (rank[v] < rank[u]) {
        ring_bonds.emplace_back(v, u);
      }
    }
  };
  dfs(root);

  // Ring-closure digits: opened at the earlier atom, closed at the later.
  std::vector<std::vector<std::pair<int, int>>> ring_at(n);  // (bond, role)
  for (int r = 0; r < static_cast<int>(ring_bonds.size()); ++r) {
    ring_at[ring_bonds[r].first].emplace_back(r, 0);
    ring_at[ring_bonds[r].second].emplace_back(r, 1);
  }
  std::vector<int> ring_digit(ring_bonds.size(), 0);
  std::vector<char> digit_used(100, 0);

  std::string &s = out.smiles;
  std::function<void(int)> emit = [&](int u) {
    int heavy_valence = 0;
    bool has_aromatic = false;
    int nh = 0;
    for (int v: mol.neighbors(u)) {
      if (folded[v]) {
        ++nh;
        continue;
      }
      BondOrder o = *mol.bond_order(u, v);
      heavy_valence += valence_contribution(o);
      has_aromatic |= o == BondOrder::kAromatic;
    }
    const Atom &a = mol.atom(u);
    bool bare = false;
    if (organic_subset(a.atomic_number) && a.formal_charge == 0
        && !has_aromatic) {
      auto allowed = normal_valences(a.atomic_number);
      auto fit = std::find_if(allowed.begin(), allowed.end(),
                              [&](int v) { return v >= heavy_valence; });
      bare = fit != allowed.end() && *fit - heavy_valence == nh;
    }
    if (bare) {
      s += a.element_symbol;
    } else {
      s += "[" + a.element_symbol;
      if (nh > 0)
        s += nh > 1 ? "H" + std::to_string(nh) : "H";
      if (a.formal_charge != 0) {
        s += a.formal_charge > 0 ? "+" : "-";
        if (std::abs(a.formal_charge) > 1)
          s += std::to_string(std::abs(a.formal_charge));
      }
      s += "]";
    }
    out.order.push_back(u);
    for (int v: mol.neighbors(u))
      if (folded[v])
        out.order.push_back(v);

    for (auto [r, role]: ring_at[u]) {
      auto [opener, closer] = ring_bonds[r];
      if (role == 0) {
        int d = 1;
        while (digit_used[d])
          ++d;
        digit_used[d] = 1;
        ring_digit[r] = d;
        s += bond_symbol(*mol.bond_order(opener, closer));
        s += ring_label(d);
      } else {
        s += ring_label(ring_digit[r]);
        digit_used[ring_digit[r]] = 0;
      }
    }

    const auto &ch = children[u];
    for (std::size_t k = 0; k < ch.size(); ++k) {
      bool branch = k + 1 < ch.size();
      if (branch)
        s += "(";
      s += bond_symbol(*mol.bond_order(u, ch[k]));
      emit(ch[k]);
      if (branch)
        s += ")";
    }
  };
  emit(root);
  return out;
}

LineMolecule line_molecule(const Molecule &input) {
  const Molecule mol = input.num_bonds() == 0 && input.num_atoms() > 1
                               && input.has_conformer()
                           ? infer_bonds(input)
                           : input;
  mol.require_connected();
  WrittenSmiles w = write_smiles(mol);
  ParsedSmiles p = parse_smiles(w.smiles);
  const int n = mol.num_atoms();
  if (p.molecule.num_atoms() != n || p.molecule.num_bonds() != mol.num_bonds())
    throw Error("line notation \"" + w.smiles
                + "\" does not reproduce the input graph");
  for (int k = 0; k < n; ++k)
    if (p.molecule.atom(k).atomic_number
        != mol.atom(w.order[k]).atomic_number)
      throw Error("line notation \"" + w.smiles
                  + "\" does not reproduce the input atoms");
  for (const Bond &b: p.molecule.bonds())
    if (!mol.bonded(w.order[b.begin], w.order[b.end]))
      throw Error("line notation \"" + w.smiles
                  + "\" does not reproduce the input bonds");
  LineMolecule lm;
  lm.sequence = std::move(p.sequence);
  if (mol.has_conformer()) {
    Conformer c(3, n);
    for (int k = 0; k < n; ++k)
      c.col(k) = mol.conformer().col(w.order[k]);
    lm.molecule = p.molecule.with_conformer(std::move(c));
  } else {
    lm.molecule = std::move(p.molecule);
  }
  return lm;
}

} // namespace mstk
