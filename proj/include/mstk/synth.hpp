//
// mstk - Copyright 2026 The mstk Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MSTK_SYNTH_HPP_
#define MSTK_SYNTH_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mstk/molecule.hpp"
#include "mstk/random.hpp"
#include "mstk/smiles.hpp"

namespace mstk {

/// Knobs for the random line-notation generator. Every produced string
/// parses with hydrogen expansion.
struct SmilesGenOptions {
  int min_heavy = 1;
  int max_heavy = 9;
  /// Relative weights of C, N, O, F, then (extended set) S, P, Cl, Br, B.
  std::vector<double> element_weights { 0.70, 0.12, 0.13, 0.05 };
  double p_aromatic_ring = 0.2;
  double p_double = 0.12;
  double p_triple = 0.04;
  int max_ring_closures = 2;
  bool ring_closure_on_aromatic = false;
  /// Syntax variety that does not change the graph.
  double p_explicit_single = 0.0;
  double p_explicit_aromatic = 0.0;
  double p_bracket = 0.0;
  double p_ring_bond_at_closer = 0.0;
  double p_percent_ring = 0.0;
  /// Charged atoms ([NH3+], [O-]).
  double p_charged = 0.0;
};

/// Small neutral CHONF molecules, up to nine heavy atoms.
SmilesGenOptions qm9_like_options();
/// Every construct of the supported grammar, used by the parser tests.
SmilesGenOptions grammar_options();

std::string random_smiles(Rng &rng, const SmilesGenOptions &opts);

struct EmbedOptions {
  int max_attempts = 8;
  int max_iterations = 4000;
  double force_tolerance = 1e-3;
};

/// Force-field geometry for a hydrogen-explicit graph: bond, angle, torsion
/// and soft repulsion terms minimized with FIRE from a random start. The
/// result passes infer_bonds back to the same graph. nullopt after
/// `max_attempts` failed starts.
std::optional<Conformer> embed(const Molecule &graph, std::uint64_t seed,
                               const EmbedOptions &opts = {});

/// Energy and gradient of the embedding force field (for tests).
double embed_energy(const Molecule &graph, const Conformer &x,
                    Conformer *grad = nullptr);

/// `count` embedded molecules in line order. Item i depends only on
/// (seed, i), so results do not change with the thread count.
std::vector<LineMolecule> generate_corpus(std::size_t count, std::uint64_t seed,
                                          const SmilesGenOptions &opts =
                                              qm9_like_options());

} // namespace mstk

#endif // MSTK_SYNTH_HPP_
