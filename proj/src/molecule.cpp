//
// mstk - Copyright 2026 The mstk Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mstk/molecule.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <utility>

#include "mstk/elements.hpp"
#include "mstk/error.hpp"

namespace mstk {

int valence_contribution(BondOrder order) {
  switch (order) {
  case BondOrder::kSingle:
  case BondOrder::kAromatic:
    return 1;
  case BondOrder::kDouble:
    return 2;
  case BondOrder::kTriple:
    return 3;
  }
  return 1;
}

Atom Atom::from_atomic_number(int z, int formal_charge) {
  std::string_view sym = mstk::element_symbol(z);
  if (sym.empty())
    throw Error("atomic number out of range: " + std::to_string(z));
  return Atom { z, std::string(sym), formal_charge };
}

Bond::Bond(int a, int b, BondOrder o)
    : begin(std::min(a, b)), end(std::max(a, b)), order(o) { }

Molecule::Molecule(std::vector<Atom> atoms, std::vector<Bond> bonds,
                   std::optional<Conformer> conformer)
    : atoms_(std::move(atoms)), bonds_(std::move(bonds)),
      conformer_(std::move(conformer)) {
  const int n = num_atoms();
  for (const Atom &a: atoms_) {
    if (a.atomic_number < 1 || a.atomic_number > kMaxAtomicNumber)
      throw Error("atomic number out of range: "
                  + std::to_string(a.atomic_number));
    if (element_symbol(a.atomic_number) != a.element_symbol)
      throw Error("element symbol '" + a.element_symbol
                  + "' does not match atomic number "
                  + std::to_string(a.atomic_number));
  }

  adjacency_.assign(n, {});
  for (Bond &b: bonds_) {
    if (b.begin > b.end)
      std::swap(b.begin, b.end);
    if (b.begin < 0 || b.end >= n)
      throw Error("bond endpoint out of range");
    if (b.begin == b.end)
      throw Error("bond endpoints must be distinct");
    auto &nb = adjacency_[b.begin];
    if (std::find(nb.begin(), nb.end(), b.end) != nb.end())
      throw Error("duplicate bond " + std::to_string(b.begin) + "-"
                  + std::to_string(b.end));
    adjacency_[b.begin].push_back(b.end);
    adjacency_[b.end].push_back(b.begin);
  }
  for (auto &nb: adjacency_)
    std::sort(nb.begin(), nb.end());

  if (conformer_) {
    if (conformer_->cols() != n)
      throw Error("conformer has " + std::to_string(conformer_->cols())
                  + " positions for " + std::to_string(n) + " atoms");
    if (!conformer_->allFinite())
      throw Error("conformer contains non-finite coordinates");
  }
}

const Conformer &Molecule::conformer() const {
  if (!conformer_)
    throw Error("molecule has no conformer");
  return *conformer_;
}

std::optional<BondOrder> Molecule::bond_order(int i, int j) const {
  for (const Bond &b: bonds_)
    if ((b.begin == i && b.end == j) || (b.begin == j && b.end == i))
      return b.order;
  return std::nullopt;
}

bool Molecule::is_connected() const {
  return count_fragments(*this) <= 1;
}

void Molecule::require_connected() const {
  int frags = count_fragments(*this);
  if (frags > 1)
    throw Error("molecule has " + std::to_string(frags)
                + " fragments; only single-fragment inputs are supported");
}

Molecule Molecule::with_conformer(Conformer conformer) const {
  return Molecule(atoms_, bonds_, std::move(conformer));
}

Molecule Molecule::without_conformer() const {
  return Molecule(atoms_, bonds_);
}

bool Molecule::operator==(const Molecule &other) const {
  if (atoms_ != other.atoms_ || has_conformer() != other.has_conformer())
    return false;
  auto sorted = [](std::vector<Bond> b) {
    std::sort(b.begin(), b.end(), [](const Bond &x, const Bond &y) {
      return std::pair(x.begin, x.end) < std::pair(y.begin, y.end);
    });
    return b;
  };
  if (sorted(bonds_) != sorted(other.bonds_))
    return false;
  return !has_conformer() || *conformer_ == *other.conformer_;
}

int count_fragments(const Molecule &mol) {
  const int n = mol.num_atoms();
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x)
      x = parent[x] = parent[parent[x]];
    return x;
  };
  int frags = n;
  for (const Bond &b: mol.bonds()) {
    int ra = find(b.begin), rb = find(b.end);
    if (ra != rb) {
      parent[ra] = rb;
      --frags;
    }
  }
  return frags;
}

Molecule reorder(const Molecule &mol, std::span<const int> order) {
  const int n = mol.num_atoms();
  if (static_cast<int>(order.size()) != n)
    throw Error("atom order length does not match atom count");
  std::vector<int> inverse(n, -1);
  for (int k = 0; k < n; ++k) {
    int src = order[k];
    if (src < 0 || src >= n || inverse[src] != -1)
      throw Error("atom order is not a permutation");
    inverse[src] = k;
  }

  std::vector<Atom> atoms;
  atoms.reserve(n);
  for (int k = 0; k < n; ++k)
    atoms.push_back(mol.atom(order[k]));
  std::vector<Bond> bonds;
  bonds.reserve(mol.num_bonds());
  for (const Bond &b: mol.bonds())
    bonds.emplace_back(inverse[b.begin], inverse[b.end], b.order);

  std::optional<Conformer> conf;
  if (mol.has_conformer()) {
    conf = Conformer(3, n);
    for (int k = 0; k < n; ++k)
      conf->col(k) = mol.conformer().col(order[k]);
  }
  return Molecule(std::move(atoms), std::move(bonds), std::move(conf));
}

// ---------------------------------------------------------------- text utils

namespace {
std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      if (pos < text.size())
        lines.push_back(text.substr(pos));
      break;
    }
    std::string_view line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r')
      line.remove_suffix(1);
    lines.push_back(line);
    pos = nl + 1;
  }
  return lines;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i])))
      ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j])))
      ++j;
    if (j > i)
      out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

template <class T>
std::optional<T> parse_number(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+')
    s.remove_prefix(1);
  T value {};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    return std::nullopt;
  return value;
}

std::string_view field(std::string_view line, std::size_t pos,
                       std::size_t len) {
  if (pos >= line.size())
    return {};
  return line.substr(pos, len);
}

// Accepts "Cl", "CL" and "cl".
std::optional<int> lookup_element(std::string_view sym) {
  if (sym.empty() || sym.size() > 3)
    return std::nullopt;
  std::string norm(sym);
  norm[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(norm[0])));
  for (std::size_t i = 1; i < norm.size(); ++i)
    norm[i] =
        static_cast<char>(std::tolower(static_cast<unsigned char>(norm[i])));
  return atomic_number(norm);
}

std::string format(const char *fmt, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}
} // namespace

// ---------------------------------------------------------------- XYZ

Molecule read_xyz(std::string_view text) {
  auto lines = split_lines(text);
  if (lines.empty())
    throw FileParseError("empty XYZ input", 1);
  auto count = parse_number<int>(lines[0]);
  if (!count || *count < 0)
    throw FileParseError("malformed atom count", 1);
  const int n = *count;
  if (static_cast<int>(lines.size()) < n + 2)
    throw FileParseError("expected " + std::to_string(n)
                             + " atom lines, found "
                             + std::to_string(std::max<int>(
                                 0, static_cast<int>(lines.size()) - 2)),
                         lines.size() + 1);

  std::vector<Atom> atoms;
  Conformer conf(3, n);
  for (int i = 0; i < n; ++i) {
    const std::size_t lineno = i + 3;
    auto fields = split_ws(lines[i + 2]);
    if (fields.size() < 4)
      throw FileParseError("expected element and three coordinates", lineno);
    auto z = lookup_element(fields[0]);
    if (!z)
      throw FileParseError("unknown element \"" + std::string(fields[0])
                               + "\"",
                           lineno);
    atoms.push_back(Atom::from_atomic_number(*z));
    for (int k = 0; k < 3; ++k) {
      auto v = parse_number<double>(fields[k + 1]);
      if (!v || !std::isfinite(*v))
        throw FileParseError("non-numeric coordinate \""
                                 + std::string(fields[k + 1]) + "\"",
                             lineno);
      conf(k, i) = *v;
    }
  }
  return Molecule(std::move(atoms), {}, std::move(conf));
}

std::string write_xyz(const Molecule &mol, std::string_view comment) {
  std::string out = std::to_string(mol.num_atoms()) + "\n";
  out += comment;
  out += "\n";
  for (int i = 0; i < mol.num_atoms(); ++i) {
    Vec3 x = mol.has_conformer() ? mol.position(i) : Vec3::Zero();
    out += format("%-2s %16.10f %16.10f %16.10f\n",
                  mol.atom(i).element_symbol.c_str(), x.x(), x.y(), x.z());
  }
  return out;
}

Molecule infer_bonds(const Molecule &mol) {
  const Conformer &x = mol.conformer();
  std::vector<Bond> bonds;
  for (int i = 0; i < mol.num_atoms(); ++i) {
    for (int j = i + 1; j < mol.num_atoms(); ++j) {
      double cutoff = covalent_radius(mol.atom(i).atomic_number)
                      + covalent_radius(mol.atom(j).atomic_number)
                      + kBondMargin;
      if ((x.col(i) - x.col(j)).norm() <= cutoff)
        bonds.emplace_back(i, j, BondOrder::kSingle);
    }
  }
  return Molecule(mol.atoms(), std::move(bonds), x);
}

// ---------------------------------------------------------------- MOL V2000

namespace {
int charge_from_code(int code) {
  switch (code) {
  case 1:
    return 3;
  case 2:
    return 2;
  case 3:
    return 1;
  case 5:
    return -1;
  case 6:
    return -2;
  case 7:
    return -3;
  default:
    return 0;
  }
}

int code_from_charge(int charge) {
  if (charge < -3 || charge > 3 || charge == 0)
    return 0;
  return 4 - charge;
}

Molecule parse_molblock(std::span<const std::string_view> lines,
                        std::size_t line_offset) {
  if (lines.size() < 4)
    throw FileParseError("truncated MOL header", line_offset + lines.size());
  std::string_view counts = lines[3];
  auto na = parse_number<int>(field(counts, 0, 3));
  auto nb = parse_number<int>(field(counts, 3, 3));
  if (!na || !nb || *na < 0 || *nb < 0)
    throw FileParseError("malformed counts line", line_offset + 4);

  auto is_terminator = [](std::string_view l) {
    return l.starts_with("M  ") || l.starts_with("$$$$");
  };

  std::vector<Atom> atoms;
  Conformer conf(3, *na);
  std::size_t li = 4;
  for (int i = 0; i < *na; ++i, ++li) {
    if (li >= lines.size() || is_terminator(lines[li]))
      throw FileParseError("counts mismatch: declared "
                               + std::to_string(*na) + " atoms, found "
                               + std::to_string(i),
                           line_offset + li + 1);
    std::string_view l = lines[li];
    for (int k = 0; k < 3; ++k) {
      auto v = parse_number<double>(field(l, 10 * k, 10));
      if (!v)
        throw FileParseError("non-numeric coordinate", line_offset + li + 1);
      conf(k, i) = *v;
    }
    std::string_view sym = trim(field(l, 31, 3));
    auto z = lookup_element(sym);
    if (!z)
      throw FileParseError("unknown element \"" + std::string(sym) + "\"",
                           line_offset + li + 1);
    int charge = 0;
    if (auto code = parse_number<int>(field(l, 36, 3)))
      charge = charge_from_code(*code);
    atoms.push_back(Atom::from_atomic_number(*z, charge));
  }

  std::vector<Bond> bonds;
  for (int b = 0; b < *nb; ++b, ++li) {
    if (li >= lines.size() || is_terminator(lines[li]))
      throw FileParseError("counts mismatch: declared " + std::to_string(*nb)
                               + " bonds, found " + std::to_string(b),
                           line_offset + li + 1);
    std::string_view l = lines[li];
    auto a1 = parse_number<int>(field(l, 0, 3));
    auto a2 = parse_number<int>(field(l, 3, 3));
    auto ty = parse_number<int>(field(l, 6, 3));
    if (!a1 || !a2 || !ty)
      throw FileParseError("malformed bond line", line_offset + li + 1);
    if (*a1 < 1 || *a1 > *na || *a2 < 1 || *a2 > *na)
      throw FileParseError("bond index out of range", line_offset + li + 1);
    if (*ty < 1 || *ty > 4)
      throw FileParseError("unsupported bond type " + std::to_string(*ty),
                           line_offset + li + 1);
    bonds.emplace_back(*a1 - 1, *a2 - 1, static_cast<BondOrder>(*ty));
  }

  bool saw_chg = false;
  for (; li < lines.size(); ++li) {
    std::string_view l = lines[li];
    if (l.starts_with("M  END") || l.starts_with("$$$$"))
      break;
    if (!l.starts_with("M  CHG"))
      continue;
    if (!saw_chg) {
      // M  CHG supersedes atom-block charge codes.
      for (Atom &a: atoms)
        a.formal_charge = 0;
      saw_chg = true;
    }
    auto f = split_ws(l.substr(6));
    if (f.empty())
      continue;
    auto cnt = parse_number<int>(f[0]);
    if (!cnt || static_cast<int>(f.size()) < 1 + 2 * *cnt)
      throw FileParseError("malformed M  CHG line", line_offset + li + 1);
    for (int k = 0; k < *cnt; ++k) {
      auto idx = parse_number<int>(f[1 + 2 * k]);
      auto chg = parse_number<int>(f[2 + 2 * k]);
      if (!idx || !chg || *idx < 1 || *idx > *na)
        throw FileParseError("malformed M  CHG entry", line_offset + li + 1);
      atoms[*idx - 1].formal_charge = *chg;
    }
  }

  try {
    return Molecule(std::move(atoms), std::move(bonds), std::move(conf));
  } catch (const FileParseError &) {
    throw;
  } catch (const Error &e) {
    throw FileParseError(e.what(), line_offset + 4);
  }
}
} // namespace

Molecule read_molblock(std::string_view text) {
  auto lines = split_lines(text);
  return parse_molblock(lines, 0);
}

std::string write_molblock(const Molecule &mol, std::string_view title) {
  std::string out(title);
  out += "\n  mstk\n\n";
  out += format("%3d%3d  0  0  0  0  0  0  0  0999 V2000\n", mol.num_atoms(),
                mol.num_bonds());
  for (int i = 0; i < mol.num_atoms(); ++i) {
    Vec3 x = mol.has_conformer() ? mol.position(i) : Vec3::Zero();
    const Atom &a = mol.atom(i);
    out += format("%10.4f%10.4f%10.4f %-3s 0%3d  0  0  0  0  0  0  0  0  0  0\n",
                  x.x(), x.y(), x.z(), a.element_symbol.c_str(),
                  code_from_charge(a.formal_charge));
  }
  for (const Bond &b: mol.bonds())
    out += format("%3d%3d%3d  0\n", b.begin + 1, b.end + 1,
                  static_cast<int>(b.order));

  std::vector<int> charged;
  for (int i = 0; i < mol.num_atoms(); ++i)
    if (mol.atom(i).formal_charge != 0)
      charged.push_back(i);
  for (std::size_t k = 0; k < charged.size(); k += 8) {
    std::size_t m = std::min<std::size_t>(8, charged.size() - k);
    out += format("M  CHG%3d", static_cast<int>(m));
    for (std::size_t t = 0; t < m; ++t)
      out += format(" %3d %3d", charged[k + t] + 1,
                    mol.atom(charged[k + t]).formal_charge);
    out += "\n";
  }
  out += "M  END\n";
  return out;
}

namespace {
template <class Fn>
void for_each_record(std::string_view text, Fn &&fn) {
  auto lines = split_lines(text);
  std::size_t start = 0;
  for (std::size_t i = 0; i <= lines.size(); ++i) {
    bool end = i == lines.size() || lines[i].starts_with("$$$$");
    if (!end)
      continue;
    std::span<const std::string_view> rec(lines.data() + start, i - start);
    bool blank = std::all_of(rec.begin(), rec.end(), [](std::string_view l) {
      return trim(l).empty();
    });
    if (!blank)
      fn(rec, start);
    start = i + 1;
  }
}
} // namespace

std::vector<Molecule> read_sdf(std::string_view text) {
  std::vector<Molecule> out;
  for_each_record(text, [&](std::span<const std::string_view> rec,
                            std::size_t offset) {
    out.push_back(parse_molblock(rec, offset));
  });
  return out;
}

std::vector<std::string> read_sdf_titles(std::string_view text) {
  std::vector<std::string> out;
  for_each_record(text, [&](std::span<const std::string_view> rec,
                            std::size_t) {
    out.emplace_back(trim(rec[0]));
  });
  return out;
}

std::string write_sdf(std::span<const Molecule> mols,
                      std::span<const std::string> titles) {
  std::string out;
  for (std::size_t i = 0; i < mols.size(); ++i) {
    out += write_molblock(mols[i], i < titles.size() ? titles[i] : "");
    out += "$$$$\n";
  }
  return out;
}

} // namespace mstk
