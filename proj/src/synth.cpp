//
// mstk - Copyright 2026 The mstk Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mstk/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <functional>
#include <numbers>
#include <numeric>

#include "mstk/elements.hpp"
#include "mstk/error.hpp"
#include "mstk/parallel.hpp"

namespace mstk {

SmilesGenOptions qm9_like_options() { return {}; }

SmilesGenOptions grammar_options() {
  SmilesGenOptions o;
  o.max_heavy = 14;
  o.element_weights = { 0.50, 0.12, 0.12, 0.04, 0.05, 0.03, 0.05, 0.04, 0.05 };
  o.p_aromatic_ring = 0.35;
  o.p_double = 0.15;
  o.p_triple = 0.05;
  o.max_ring_closures = 3;
  o.ring_closure_on_aromatic = true;
  o.p_explicit_single = 0.15;
  o.p_explicit_aromatic = 0.2;
  o.p_bracket = 0.15;
  o.p_ring_bond_at_closer = 0.3;
  o.p_percent_ring = 0.2;
  o.p_charged = 0.1;
  return o;
}

namespace {

struct ElementSpec {
  int z;
  const char *symbol;
  int valence;
};

constexpr std::array<ElementSpec, 9> kElements { {
    { 6, "C", 4 },
    { 7, "N", 3 },
    { 8, "O", 2 },
    { 9, "F", 1 },
    { 16, "S", 2 },
    { 15, "P", 3 },
    { 17, "Cl", 1 },
    { 35, "Br", 1 },
    { 5, "B", 3 },
} };

struct GenAtom {
  int element = 0; // index into kElements
  bool aromatic = false;
  bool nh = false; // written [nH]
  int charge = 0;
  int cap = 0; // remaining bond capacity
};

struct GenBond {
  int a, b;
  int order;
  bool aromatic;
};

class Generator {
public:
  Generator(Rng &rng, const SmilesGenOptions &o): rng_(rng), o_(o) { }

  std::string run() {
    const int lo = std::max(1, o_.min_heavy);
    const int hi = std::max(lo, o_.max_heavy);
    const int target = lo + static_cast<int>(rng_.index(hi - lo + 1));
    if (target >= 5 && rng_.uniform() < o_.p_aromatic_ring)
      add_aromatic_ring(target);
    else
      add_atom(pick_element());
    int stalls = 0;
    while (static_cast<int>(atoms_.size()) < target && stalls < 50) {
      if (!grow())
        ++stalls;
    }
    const int closures =
        static_cast<int>(rng_.index(o_.max_ring_closures + 1));
    for (int c = 0; c < closures; ++c)
      close_ring();
    return write();
  }

private:
  int pick_element() {
    const std::size_t n = std::min(o_.element_weights.size(), kElements.size());
    double total = 0;
    for (std::size_t i = 0; i < n; ++i)
      total += o_.element_weights[i];
    double r = rng_.uniform() * total;
    for (std::size_t i = 0; i < n; ++i) {
      if (r < o_.element_weights[i])
        return static_cast<int>(i);
      r -= o_.element_weights[i];
    }
    return 0;
  }

  int add_atom(int element) {
    GenAtom a;
    a.element = element;
    a.cap = kElements[element].valence;
    const int z = kElements[element].z;
    if (o_.p_charged > 0 && rng_.uniform() < o_.p_charged) {
      if (z == 7) {
        a.charge = 1;
        a.cap = 4;
      } else if (z == 8) {
        a.charge = -1;
        a.cap = 1;
      }
    }
    atoms_.push_back(a);
    adj_.emplace_back();
    return static_cast<int>(atoms_.size()) - 1;
  }

  void add_bond(int a, int b, int order, bool aromatic) {
    bonds_.push_back({ a, b, order, aromatic });
    adj_[a].push_back(static_cast<int>(bonds_.size()) - 1);
    adj_[b].push_back(static_cast<int>(bonds_.size()) - 1);
    if (!aromatic) {
      atoms_[a].cap -= order;
      atoms_[b].cap -= order;
    }
  }

  void add_aromatic_ring(int target) {
    // 0 benzene, 1 pyridine, 2 pyrrole, 3 furan
    int kind = static_cast<int>(rng_.index(target >= 6 ? 4 : 2)) + (target >= 6 ? 0 : 2);
    const int size = kind <= 1 ? 6 : 5;
    for (int i = 0; i < size; ++i) {
      GenAtom a;
      a.aromatic = true;
      a.element = 0;
      a.cap = 1;
      if (i == 0 && kind == 1) {
        a.element = 1;
        a.cap = 0;
      } else if (i == 0 && kind == 2) {
        a.element = 1;
        a.nh = true;
        a.cap = 0;
      } else if (i == 0 && kind == 3) {
        a.element = 2;
        a.cap = 0;
      }
      atoms_.push_back(a);
      adj_.emplace_back();
    }
    for (int i = 0; i < size; ++i)
      add_bond(i, (i + 1) % size, 1, true);
  }

  bool grow() {
    std::vector<int> open;
    for (int i = 0; i < static_cast<int>(atoms_.size()); ++i)
      if (atoms_[i].cap >= 1)
        open.push_back(i);
    if (open.empty())
      return false;
    const int parent = open[rng_.index(open.size())];
    const int child = add_atom(pick_element());
    const int zp = kElements[atoms_[parent].element].z;
    const int zc = kElements[atoms_[child].element].z;
    int max_order = std::min(atoms_[parent].cap, atoms_[child].cap);
    if (atoms_[parent].aromatic || atoms_[parent].charge
        || atoms_[child].charge)
      max_order = 1;
    if (max_order < 1) {
      atoms_.pop_back();
      adj_.pop_back();
      return false;
    }
    int order = 1;
    const double r = rng_.uniform();
    const bool triple_ok = (zp == 6 || zp == 7) && (zc == 6 || zc == 7);
    if (max_order >= 3 && triple_ok && r < o_.p_triple)
      order = 3;
    else if (max_order >= 2 && r < o_.p_triple + o_.p_double)
      order = 2;
    add_bond(parent, child, order, false);
    return true;
  }

  int graph_distance(int from, int to) const {
    std::vector<int> dist(atoms_.size(), -1);
    std::deque<int> q { from };
    dist[from] = 0;
    while (!q.empty()) {
      int u = q.front();
      q.pop_front();
      if (u == to)
        return dist[u];
      for (int b: adj_[u]) {
        int v = bonds_[b].a == u ? bonds_[b].b : bonds_[b].a;
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          q.push_back(v);
        }
      }
    }
    return -1;
  }

  void close_ring() {
    const int n = static_cast<int>(atoms_.size());
    if (n < 3)
      return;
    for (int tries = 0; tries < 20; ++tries) {
      int u = static_cast<int>(rng_.index(n));
      int v = static_cast<int>(rng_.index(n));
      if (u == v || atoms_[u].cap < 1 || atoms_[v].cap < 1)
        continue;
      if (atoms_[u].charge || atoms_[v].charge)
        continue;
      if (!o_.ring_closure_on_aromatic
          && (atoms_[u].aromatic || atoms_[v].aromatic))
        continue;
      int d = graph_distance(u, v);
      if (d < 2 || d > 6)
        continue;
      int order = 1;
      if (atoms_[u].cap >= 2 && atoms_[v].cap >= 2 && !atoms_[u].aromatic
          && !atoms_[v].aromatic && d >= 4 && rng_.uniform() < o_.p_double)
        order = 2;
      add_bond(u, v, order, false);
      return;
    }
  }

  std::string atom_text(int u) {
    const GenAtom &a = atoms_[u];
    const ElementSpec &e = kElements[a.element];
    if (a.aromatic) {
      std::string sym(1, static_cast<char>(std::tolower(e.symbol[0])));
      if (a.nh)
        return "[" + sym + "H]";
      if (rng_.uniform() < o_.p_bracket)
        return "[" + sym + (a.cap > 0 ? "H" : "") + "]";
      return sym;
    }
    if (a.charge == 0 && !(rng_.uniform() < o_.p_bracket))
      return e.symbol;
    std::string s = std::string("[") + e.symbol;
    if (a.cap > 0)
      s += a.cap > 1 ? "H" + std::to_string(a.cap) : "H";
    if (a.charge > 0)
      s += "+";
    else if (a.charge < 0)
      s += "-";
    return s + "]";
  }

  std::string bond_text(const GenBond &b) {
    if (b.aromatic)
      return rng_.uniform() < o_.p_explicit_aromatic ? ":" : "";
    if (b.order == 2)
      return "=";
    if (b.order == 3)
      return "#";
    if (atoms_[b.a].aromatic && atoms_[b.b].aromatic)
      return "-";
    return rng_.uniform() < o_.p_explicit_single ? "-" : "";
  }

  std::string write() {
    const int n = static_cast<int>(atoms_.size());
    const int root = static_cast<int>(rng_.index(n));
    std::vector<int> rank(n, -1), parent_bond(n, -1);
    std::vector<std::vector<int>> children(n);
    std::vector<std::vector<int>> ring_at(n);
    int counter = 0;
    std::function<void(int)> dfs = [&](int u) {
      rank[u] = counter++;
      std::vector<int> nb = adj_[u];
      rng_.shuffle(std::span(nb));
      for (int b: nb) {
        if (b == parent_bond[u])
          continue;
        int v = bonds_[b].a == u ? bonds_[b].b : bonds_[b].a;
        if (rank[v] < 0) {
          parent_bond[v] = b;
          children[u].push_back(v);
          dfs(v);
        } else if (rank[v] < rank[u]) {
          ring_at[v].push_back(b);
          ring_at[u].push_back(b);
        }
      }
    };
    dfs(root);

    std::vector<int> digit(bonds_.size(), 0);
    std::vector<char> at_closer(bonds_.size(), 0);
    std::vector<char> in_use(100, 0);
    std::string s;
    std::function<void(int)> emit = [&](int u) {
      s += atom_text(u);
      for (int b: ring_at[u]) {
        const GenBond &bond = bonds_[b];
        const int other = bond.a == u ? bond.b : bond.a;
        if (rank[other] > rank[u]) { // opening
          int d = 0;
          if (rng_.uniform() < o_.p_percent_ring) {
            for (int t = 0; t < 50 && d == 0; ++t) {
              int c = 10 + static_cast<int>(rng_.index(90));
              if (!in_use[c])
                d = c;
            }
          }
          for (int c = 1; c < 100 && d == 0; ++c)
            if (!in_use[c])
              d = c;
          in_use[d] = 1;
          digit[b] = d;
          at_closer[b] = rng_.uniform() < o_.p_ring_bond_at_closer;
          if (!at_closer[b])
            s += bond_text(bond);
          s += d < 10 ? std::to_string(d) : "%" + std::to_string(d);
        } else {
          if (at_closer[b])
            s += bond_text(bond);
          const int d = digit[b];
          s += d < 10 ? std::to_string(d) : "%" + std::to_string(d);
          in_use[d] = 0;
        }
      }
      const auto &ch = children[u];
      for (std::size_t k = 0; k < ch.size(); ++k) {
        const bool branch = k + 1 < ch.size();
        if (branch)
          s += "(";
        s += bond_text(bonds_[parent_bond[ch[k]]]);
        emit(ch[k]);
        if (branch)
          s += ")";
      }
    };
    emit(root);
    return s;
  }

  Rng &rng_;
  const SmilesGenOptions &o_;
  std::vector<GenAtom> atoms_;
  std::vector<GenBond> bonds_;
  std::vector<std::vector<int>> adj_;
};

} // namespace

std::string random_smiles(Rng &rng, const SmilesGenOptions &opts) {
  return Generator(rng, opts).run();
}

// ------------------------------------------------------------- force field

namespace {

struct ForceField {
  struct Pair {
    int i, j;
    double r0;
    double k;
  };
  struct Torsion {
    int a, i, j, b;
    int period; // 3: k(1 + cos 3w), 2: k(1 - cos 2w)
    double k;
  };

  std::vector<Pair> springs;  // bonds and 1-3 distances
  std::vector<Torsion> torsions;
  std::vector<Pair> repulsion; // r0 is the minimum distance
  std::vector<double> bond_r0; // per graph bond
};

constexpr double kBondK = 300.0;
constexpr double kAngleK = 60.0;
constexpr double kRepelK = 30.0;

double ideal_length(const Molecule &g, const Bond &b) {
  double r = covalent_radius(g.atom(b.begin).atomic_number)
             + covalent_radius(g.atom(b.end).atomic_number);
  switch (b.order) {
  case BondOrder::kDouble:
    return r - 0.20;
  case BondOrder::kTriple:
    return r - 0.34;
  case BondOrder::kAromatic:
    return r - 0.10;
  default:
    return r;
  }
}

ForceField build_force_field(const Molecule &g) {
  const int n = g.num_atoms();
  ForceField ff;
  std::vector<int> hybrid(n, 3);
  for (int i = 0; i < n; ++i) {
    int doubles = 0, triples = 0, arom = 0;
    for (int j: g.neighbors(i)) {
      BondOrder o = *g.bond_order(i, j);
      doubles += o == BondOrder::kDouble;
      triples += o == BondOrder::kTriple;
      arom += o == BondOrder::kAromatic;
    }
    if (triples > 0 || doubles >= 2)
      hybrid[i] = 1;
    else if (doubles == 1 || arom > 0)
      hybrid[i] = 2;
  }

  std::vector<std::vector<std::pair<int, double>>> length(n);
  for (const Bond &b: g.bonds()) {
    const double r0 = ideal_length(g, b);
    ff.bond_r0.push_back(r0);
    ff.springs.push_back({ b.begin, b.end, r0, kBondK });
    length[b.begin].emplace_back(b.end, r0);
    length[b.end].emplace_back(b.begin, r0);
  }

  for (int i = 0; i < n; ++i) {
    const double theta = hybrid[i] == 1   ? std::numbers::pi
                         : hybrid[i] == 2 ? 2.0 * std::numbers::pi / 3.0
                                          : std::acos(-1.0 / 3.0);
    const auto &nb = length[i];
    for (std::size_t p = 0; p < nb.size(); ++p)
      for (std::size_t q = p + 1; q < nb.size(); ++q) {
        if (g.bonded(nb[p].first, nb[q].first))
          continue;
        const double r1 = nb[p].second, r2 = nb[q].second;
        const double r =
            std::sqrt(r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * std::cos(theta));
        ff.springs.push_back({ nb[p].first, nb[q].first, r, kAngleK });
      }
  }

  for (const Bond &b: g.bonds()) {
    const int i = b.begin, j = b.end;
    if (hybrid[i] == 1 || hybrid[j] == 1)
      continue;
    int period = 0;
    double k = 0;
    if (b.order == BondOrder::kDouble) {
      period = 2;
      k = 4.0;
    } else if (hybrid[i] == 2 && hybrid[j] == 2) {
      period = 2;
      k = 1.0;
    } else if (hybrid[i] == 3 && hybrid[j] == 3) {
      period = 3;
      k = 0.4;
    } else {
      continue;
    }
    for (int a: g.neighbors(i))
      for (int c: g.neighbors(j))
        if (a != j && c != i && a != c)
          ff.torsions.push_back({ a, i, j, c, period, k });
  }

  // Shortest-path distances for the repulsion classes.
  for (int i = 0; i < n; ++i) {
    std::vector<int> dist(n, -1);
    std::deque<int> q { i };
    dist[i] = 0;
    while (!q.empty()) {
      int u = q.front();
      q.pop_front();
      for (int v: g.neighbors(u))
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          q.push_back(v);
        }
    }
    for (int j = i + 1; j < n; ++j) {
      if (dist[j] >= 0 && dist[j] < 3)
        continue;
      const bool hi = g.atom(i).atomic_number == 1;
      const bool hj = g.atom(j).atomic_number == 1;
      double rmin = hi && hj ? 2.0 : (hi || hj) ? 2.4 : 2.9;
      if (dist[j] == 3)
        rmin *= 0.8;
      ff.repulsion.push_back({ i, j, rmin, kRepelK });
    }
  }
  return ff;
}

double evaluate(const ForceField &ff, const Conformer &x, Conformer *grad) {
  double e = 0;
  if (grad)
    grad->setZero(3, x.cols());
  for (const auto &s: ff.springs) {
    const Vec3 d = x.col(s.j) - x.col(s.i);
    const double r = d.norm();
    const double dr = r - s.r0;
    e += s.k * dr * dr;
    if (grad && r > 1e-12) {
      const Vec3 g = (2.0 * s.k * dr / r) * d;
      grad->col(s.j) += g;
      grad->col(s.i) -= g;
    }
  }
  for (const auto &p: ff.repulsion) {
    const Vec3 d = x.col(p.j) - x.col(p.i);
    const double r = d.norm();
    if (r >= p.r0)
      continue;
    const double dr = p.r0 - r;
    e += p.k * dr * dr;
    if (grad && r > 1e-12) {
      const Vec3 g = (-2.0 * p.k * dr / r) * d;
      grad->col(p.j) += g;
      grad->col(p.i) -= g;
    }
  }
  for (const auto &t: ff.torsions) {
    const Vec3 b1 = x.col(t.i) - x.col(t.a);
    const Vec3 b2 = x.col(t.j) - x.col(t.i);
    const Vec3 b3 = x.col(t.b) - x.col(t.j);
    const Vec3 m = b1.cross(b2);
    const Vec3 nn = b2.cross(b3);
    const double m2 = m.squaredNorm(), n2 = nn.squaredNorm();
    const double lb2 = b2.norm();
    if (m2 < 1e-10 || n2 < 1e-10 || lb2 < 1e-10)
      continue;
    const double w = std::atan2(lb2 * b1.dot(nn), m.dot(nn));
    double de;
    if (t.period == 3) {
      e += t.k * (1.0 + std::cos(3.0 * w));
      de = -3.0 * t.k * std::sin(3.0 * w);
    } else {
      e += t.k * (1.0 - std::cos(2.0 * w));
      de = 2.0 * t.k * std::sin(2.0 * w);
    }
    if (!grad)
      continue;
    const Vec3 g1 = -lb2 / m2 * m;
    const Vec3 g4 = lb2 / n2 * nn;
    const double f1 = -b1.dot(b2) / (lb2 * lb2);
    const double f3 = -b3.dot(b2) / (lb2 * lb2);
    const Vec3 g2 = (f1 - 1.0) * g1 - f3 * g4;
    const Vec3 g3 = (f3 - 1.0) * g4 - f1 * g1;
    grad->col(t.a) += de * g1;
    grad->col(t.i) += de * g2;
    grad->col(t.j) += de * g3;
    grad->col(t.b) += de * g4;
  }
  return e;
}

Conformer random_start(const Molecule &g, Rng &rng) {
  const int n = g.num_atoms();
  Conformer x = Conformer::Zero(3, n);
  std::vector<char> placed(n, 0);
  std::deque<int> q { 0 };
  placed[0] = 1;
  auto random_dir = [&] {
    Vec3 v;
    do {
      v = Vec3(rng.normal(), rng.normal(), rng.normal());
    } while (v.norm() < 1e-6);
    return v.normalized();
  };
  while (!q.empty()) {
    int u = q.front();
    q.pop_front();
    for (int v: g.neighbors(u)) {
      if (placed[v])
        continue;
      const double r = covalent_radius(g.atom(u).atomic_number)
                       + covalent_radius(g.atom(v).atomic_number);
      Vec3 best = x.col(u) + r * random_dir();
      double best_score = -1;
      for (int t = 0; t < 12; ++t) {
        Vec3 c = x.col(u) + r * random_dir();
        double score = 1e9;
        for (int w = 0; w < n; ++w)
          if (placed[w] && w != u)
            score = std::min(score, (x.col(w) - c).norm());
        if (score > best_score) {
          best_score = score;
          best = c;
        }
      }
      x.col(v) = best;
      placed[v] = 1;
      q.push_back(v);
    }
  }
  return x;
}

bool minimize(const ForceField &ff, Conformer &x, const EmbedOptions &o) {
  const Eigen::Index n = x.cols();
  Conformer v = Conformer::Zero(3, n), grad;
  double dt = 0.02, alpha = 0.1;
  int positive = 0;
  constexpr double kDtMax = 0.2, kMaxStep = 0.1;
  for (int it = 0; it < o.max_iterations; ++it) {
    evaluate(ff, x, &grad);
    const Conformer f = -grad;
    const double fmax = f.colwise().norm().maxCoeff();
    if (!std::isfinite(fmax))
      return false;
    if (fmax < o.force_tolerance)
      return true;
    const double p = (f.array() * v.array()).sum();
    if (p > 0) {
      const double vn = v.norm(), fn = f.norm();
      v = (1.0 - alpha) * v + (alpha * vn / fn) * f;
      if (++positive > 5) {
        dt = std::min(dt * 1.1, kDtMax);
        alpha *= 0.99;
      }
    } else {
      v.setZero();
      dt *= 0.5;
      alpha = 0.1;
      positive = 0;
    }
    v += dt * f;
    Conformer dx = dt * v;
    for (Eigen::Index c = 0; c < n; ++c) {
      const double s = dx.col(c).norm();
      if (s > kMaxStep)
        dx.col(c) *= kMaxStep / s;
    }
    x += dx;
  }
  return false;
}

bool acceptable(const Molecule &g, const ForceField &ff, const Conformer &x) {
  for (int b = 0; b < g.num_bonds(); ++b) {
    const Bond &bond = g.bonds()[b];
    const double r = (x.col(bond.begin) - x.col(bond.end)).norm();
    if (std::abs(r - ff.bond_r0[b]) > 0.15)
      return false;
  }
  const int n = g.num_atoms();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double cut = covalent_radius(g.atom(i).atomic_number)
                         + covalent_radius(g.atom(j).atomic_number)
                         + kBondMargin;
      const bool close = (x.col(i) - x.col(j)).norm() <= cut;
      if (close != g.bonded(i, j))
        return false;
    }
  return true;
}

} // namespace

double embed_energy(const Molecule &graph, const Conformer &x,
                    Conformer *grad) {
  return evaluate(build_force_field(graph), x, grad);
}

std::optional<Conformer> embed(const Molecule &graph, std::uint64_t seed,
                               const EmbedOptions &opts) {
  const int n = graph.num_atoms();
  if (n == 0)
    return Conformer(3, 0);
  graph.require_connected();
  const ForceField ff = build_force_field(graph);
  for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(attempt)));
    Conformer x = random_start(graph, rng);
    if (n > 1 && !minimize(ff, x, opts))
      continue;
    if (acceptable(graph, ff, x))
      return x;
  }
  return std::nullopt;
}

std::vector<LineMolecule> generate_corpus(std::size_t count, std::uint64_t seed,
                                          const SmilesGenOptions &opts) {
  constexpr int kTries = 64;
  return parallel_map<LineMolecule>(count, [&](std::size_t i) {
    for (int t = 0; t < kTries; ++t) {
      const std::uint64_t s =
          derive_seed(seed, static_cast<std::uint64_t>(i) * kTries + t);
      Rng rng(s);
      ParsedSmiles p = parse_smiles(random_smiles(rng, opts));
      EmbedOptions eo;
      eo.max_attempts = 4;
      if (auto x = embed(p.molecule, derive_seed(s, 0x5eed), eo))
        return LineMolecule { p.molecule.with_conformer(std::move(*x)),
                              std::move(p.sequence) };
    }
    throw Error("could not embed a molecule for corpus item "
                + std::to_string(i));
  });
}

} // namespace mstk
