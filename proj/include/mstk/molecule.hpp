//
// mstk - Copyright 2026 The mstk Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MSTK_MOLECULE_HPP_
#define MSTK_MOLECULE_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace mstk {

using Vec3 = Eigen::Vector3d;

/// Column k holds the position of atom k, in Angstrom.
using Conformer = Eigen::Matrix3Xd;

enum class BondOrder : std::uint8_t {
  kSingle = 1,
  kDouble = 2,
  kTriple = 3,
  kAromatic = 4,
};

/// Valence contribution used for hydrogen counting; aromatic counts as 1.
int valence_contribution(BondOrder order);

struct Atom {
  int atomic_number = 6;
  std::string element_symbol = "C";
  int formal_charge = 0;

  /// Throws mstk::Error when z is outside 1..118.
  static Atom from_atomic_number(int z, int formal_charge = 0);

  bool operator==(const Atom &) const = default;
};

/// Endpoints are stored with begin < end.
struct Bond {
  int begin = 0;
  int end = 0;
  BondOrder order = BondOrder::kSingle;

  Bond() = default;
  Bond(int a, int b, BondOrder o = BondOrder::kSingle);

  int other(int atom) const { return atom == begin ? end : begin; }

  bool operator==(const Bond &) const = default;
};

/// Immutable molecular graph with an optional conformer.
///
/// The constructor validates every invariant (atom numbers, bond endpoints,
/// duplicate bonds, conformer shape and finiteness) and throws mstk::Error on
/// violation. Connectivity is not enforced here; callers that need a single
/// fragment use require_connected().
class Molecule {
public:
  Molecule() = default;
  Molecule(std::vector<Atom> atoms, std::vector<Bond> bonds,
           std::optional<Conformer> conformer = std::nullopt);

  int num_atoms() const { return static_cast<int>(atoms_.size()); }
  int num_bonds() const { return static_cast<int>(bonds_.size()); }

  const std::vector<Atom> &atoms() const { return atoms_; }
  const Atom &atom(int i) const { return atoms_[i]; }
  const std::vector<Bond> &bonds() const { return bonds_; }

  bool has_conformer() const { return conformer_.has_value(); }
  /// Throws mstk::Error when no conformer is present.
  const Conformer &conformer() const;
  Vec3 position(int i) const { return conformer().col(i); }

  /// Neighbor atom indices in ascending order.
  std::span<const int> neighbors(int i) const { return adjacency_[i]; }
  std::optional<BondOrder> bond_order(int i, int j) const;
  bool bonded(int i, int j) const { return bond_order(i, j).has_value(); }

  bool is_connected() const;
  /// Throws mstk::Error naming the fragment count when disconnected.
  void require_connected() const;

  Molecule with_conformer(Conformer conformer) const;
  Molecule without_conformer() const;

  bool operator==(const Molecule &other) const;

private:
  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  std::optional<Conformer> conformer_;
  std::vector<std::vector<int>> adjacency_;
};

/// Atom order: `order[k]` is the source index of the atom placed at k.
using AtomOrder = std::vector<int>;

/// Relabels atoms, bonds and conformer columns; throws when `order` is not a
/// permutation of 0..n-1.
Molecule reorder(const Molecule &mol, std::span<const int> order);

/// Number of connected components (0 for an empty molecule).
int count_fragments(const Molecule &mol);

// ---------------------------------------------------------------- file formats

Molecule read_xyz(std::string_view text);
std::string write_xyz(const Molecule &mol, std::string_view comment = {});

/// Covalent-radius cutoff added on top of r_cov(a) + r_cov(b).
constexpr double kBondMargin = 0.4;

/// Replaces the bond list with single bonds between atoms closer than
/// r_cov(a) + r_cov(b) + kBondMargin.
Molecule infer_bonds(const Molecule &mol);

Molecule read_molblock(std::string_view text);
std::string write_molblock(const Molecule &mol, std::string_view title = {});

/// Records separated by "$$$$" lines; properties after "M  END" are skipped.
std::vector<Molecule> read_sdf(std::string_view text);
/// MOL block titles for each record, in the same order as read_sdf.
std::vector<std::string> read_sdf_titles(std::string_view text);
std::string write_sdf(std::span<const Molecule> mols,
                      std::span<const std::string> titles = {});

} // namespace mstk

#endif // MSTK_MOLECULE_HPP_
