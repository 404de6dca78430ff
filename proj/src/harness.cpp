//
// mstk - Copyright 2026 The mstk Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mstk/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "mstk/align.hpp"
#include "mstk/error.hpp"
#include "mstk/parallel.hpp"
#include "mstk/random.hpp"
#include "mstk/vocab.hpp"

namespace mstk {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double percentile(const std::vector<double> &sorted, double p) {
  if (sorted.size() == 1)
    return sorted[0];
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

} // namespace

Summary summarize(std::vector<double> values) {
  std::erase_if(values, [](double v) { return std::isnan(v); });
  Summary s;
  s.count = values.size();
  if (values.empty())
    return s;
  std::sort(values.begin(), values.end());
  double sum = 0;
  for (double v: values)
    sum += v;
  s.mean = sum / static_cast<double>(values.size());
  s.median = percentile(values, 0.5);
  s.p95 = percentile(values, 0.95);
  s.max = values.back();
  return s;
}

Conformer to_gauge(const Conformer &x) {
  if (x.cols() == 0)
    return x;
  const Eigen::Matrix3d g = gauge_frame(x);
  return g.transpose() * (x.colwise() - x.col(0));
}

RoundtripRecord roundtrip(const LineMolecule &lm, FrameStrategy strategy,
                          const Quantizer *quantizer) {
  RoundtripRecord r;
  const Molecule &mol = lm.molecule;
  r.atoms = mol.num_atoms();
  const Conformer &x = mol.conformer();
  const Conformer gauge = to_gauge(x);
  const auto coords = encode_molecule(mol, strategy);
  const Conformer exact = decode_molecule(mol, coords, strategy);
  r.exact_rmsd = aligned_rmsd(x, exact);
  r.exact_gauge_rmsd = rmsd(gauge, exact);
  if (quantizer) {
    try {
      const LineMolecule back = sequence_to_structure(
          structure_to_sequence(lm, *quantizer), *quantizer);
      const Conformer &y = back.molecule.conformer();
      if (y.cols() != x.cols())
        throw Error("decoded atom count differs");
      r.quantized_rmsd = aligned_rmsd(x, y);
      r.quantized_gauge_rmsd = rmsd(gauge, y);
    } catch (const Error &e) {
      r.error = e.what();
    }
  }
  return r;
}

SphericalCoord perturb(const SphericalCoord &s, const double unit_noise[3],
                       double scale, NoiseSpace space) {
  constexpr double pi = std::numbers::pi;
  const double sign = s.phi < 0 ? -1.0 : 1.0;
  SphericalCoord out;
  if (space == NoiseSpace::kNormalized) {
    out.d = std::exp(std::log(s.d) + scale * unit_noise[0]);
    out.theta = std::clamp(s.theta / pi + scale * unit_noise[1], 0.0, 1.0) * pi;
    out.phi = sign
              * std::clamp(std::abs(s.phi) / pi + scale * unit_noise[2], 0.0,
                           1.0)
              * pi;
  } else {
    out.d = std::max(s.d + scale * unit_noise[0], 1e-6);
    out.theta = std::clamp(s.theta + scale * unit_noise[1], 0.0, pi);
    out.phi = sign * std::clamp(std::abs(s.phi) + scale * unit_noise[2], 0.0, pi);
  }
  return out;
}

std::vector<NoiseCell> noise_study(std::span<const LineMolecule> corpus,
                                   const NoiseStudyConfig &cfg) {
  if (!(cfg.rmsd_threshold > 0))
    throw Error("rmsd threshold must be positive");
  for (double s: cfg.noise_scales)
    if (!(s >= 0) || !std::isfinite(s))
      throw Error("noise scale must be finite and non-negative");
  const std::size_t n = cfg.sample_count == 0
                            ? corpus.size()
                            : std::min(cfg.sample_count, corpus.size());
  const std::size_t n_strat = cfg.strategies.size();
  const std::size_t n_scale = cfg.noise_scales.size();
  struct Pair {
    double aligned = kNaN;
    double gauge = kNaN;
  };

  auto per_mol = parallel_map<std::vector<Pair>>(n, [&](std::size_t m) {
    const Molecule &mol = corpus[m].molecule;
    const int atoms = mol.num_atoms();
    Rng rng(derive_seed(cfg.seed, m));
    std::vector<double> unit(3 * static_cast<std::size_t>(atoms));
    for (double &u: unit)
      u = rng.normal();
    const Conformer &x = mol.conformer();
    const Conformer gauge = to_gauge(x);
    std::vector<Pair> out(n_strat * n_scale);
    for (std::size_t s = 0; s < n_strat; ++s) {
      const auto coords = encode_molecule(mol, cfg.strategies[s]);
      for (std::size_t k = 0; k < n_scale; ++k) {
        std::vector<SphericalCoord> noisy(coords);
        for (int i = 1; i < atoms; ++i)
          noisy[i] = perturb(coords[i], &unit[3 * i], cfg.noise_scales[k],
                             cfg.space);
        try {
          const Conformer y = decode_molecule(mol, noisy, cfg.strategies[s]);
          out[s * n_scale + k] = { aligned_rmsd(x, y), rmsd(gauge, y) };
        } catch (const GeometryError &) {
        }
      }
    }
    return out;
  });

  std::vector<NoiseCell> cells;
  for (std::size_t s = 0; s < n_strat; ++s) {
    for (std::size_t k = 0; k < n_scale; ++k) {
      NoiseCell c;
      c.strategy = cfg.strategies[s];
      c.scale = cfg.noise_scales[k];
      c.samples = n;
      std::vector<double> al, ga;
      for (std::size_t m = 0; m < n; ++m) {
        const Pair &p = per_mol[m][s * n_scale + k];
        if (std::isnan(p.aligned)) {
          ++c.failed;
          continue;
        }
        c.below += p.aligned < cfg.rmsd_threshold;
        al.push_back(p.aligned);
        ga.push_back(p.gauge);
      }
      c.fraction = n ? static_cast<double>(c.below) / static_cast<double>(n)
                     : 0.0;
      c.aligned = summarize(std::move(al));
      c.gauge = summarize(std::move(ga));
      cells.push_back(std::move(c));
    }
  }
  return cells;
}

std::vector<CodeRow> code_table(const Quantizer &q) {
  std::vector<CodeRow> rows;
  for (int k = 0; k < q.size(); ++k) {
    const DescriptorVec &v = q.decode_code(k);
    rows.push_back({ k, v[kSlotD], v[kSlotTheta], v[kSlotAbsPhi],
                     v[kSlotSign] });
  }
  return rows;
}

long HitMatrix::type_total(std::size_t t) const {
  long s = 0;
  for (long c: counts[t])
    s += c;
  return s;
}

std::vector<std::vector<double>> HitMatrix::log_prob() const {
  std::vector<std::vector<double>> out(counts.size());
  for (std::size_t t = 0; t < counts.size(); ++t) {
    const double total = static_cast<double>(type_total(t));
    for (long c: counts[t])
      out[t].push_back(c > 0 ? std::log(static_cast<double>(c) / total)
                             : -std::numeric_limits<double>::infinity());
  }
  return out;
}

double HitMatrix::utilization() const {
  if (counts.empty() || counts[0].empty())
    return 0;
  std::size_t used = 0;
  for (std::size_t k = 0; k < counts[0].size(); ++k) {
    bool any = false;
    for (const auto &row: counts)
      any = any || row[k] > 0;
    used += any;
  }
  return static_cast<double>(used) / static_cast<double>(counts[0].size());
}

HitMatrix hit_matrix(std::span<const LineMolecule> corpus, const Quantizer &q) {
  auto codes = parallel_map<std::vector<int>>(corpus.size(), [&](std::size_t m) {
    const auto desc = molecule_descriptors(corpus[m].molecule, q.strategy());
    return q.encode_atoms(desc);
  });
  std::map<std::string, std::vector<long>> rows;
  for (std::size_t m = 0; m < corpus.size(); ++m) {
    const Molecule &mol = corpus[m].molecule;
    for (int i = 0; i < mol.num_atoms(); ++i) {
      auto &row = rows[mol.atom(i).element_symbol];
      row.resize(q.size(), 0);
      ++row[codes[m][i]];
    }
  }
  HitMatrix h;
  for (auto &[t, row]: rows) {
    h.types.push_back(t);
    h.counts.push_back(std::move(row));
  }
  return h;
}

std::vector<DescriptorVec> corpus_descriptors(
    std::span<const LineMolecule> corpus, FrameStrategy strategy) {
  auto per = parallel_map<std::vector<DescriptorVec>>(
      corpus.size(), [&](std::size_t m) {
        return molecule_descriptors(corpus[m].molecule, strategy);
      });
  std::vector<DescriptorVec> out;
  for (auto &v: per)
    out.insert(out.end(), v.begin(), v.end());
  return out;
}

double reconstruction_mse(const Quantizer &q,
                          std::span<const DescriptorVec> raw) {
  if (raw.empty())
    return 0;
  const NormStats &stats = q.model().codebook.norm_stats;
  std::vector<DescriptorVec> decoded;
  for (int k = 0; k < q.size(); ++k)
    decoded.push_back(normalize(q.decode_code(k), stats));
  const std::vector<int> codes = q.encode_atoms(raw);
  double sum = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    DescriptorVec diff = normalize(raw[i], stats) - decoded[codes[i]];
    diff[kSlotSign] = 0;
    sum += diff.squaredNorm();
  }
  return sum / (static_cast<double>(raw.size()) * (kDescriptorDim - 1));
}

std::vector<SweepPoint> k_sweep(std::span<const DescriptorVec> data,
                                const TrainConfig &cfg, std::span<const int> ks,
                                FrameStrategy strategy) {
  std::vector<SweepPoint> out;
  for (int k: ks) {
    TrainConfig c = cfg;
    c.codebook_size = k;
    TrainResult r = train(data, c, strategy);
    Quantizer q(std::move(r.model));
    out.push_back({ k, r.report.final_metrics, reconstruction_mse(q, data) });
  }
  return out;
}

} // namespace mstk
