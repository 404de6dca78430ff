//
// mstk - Copyright 2026 The mstk Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance run. Prints one PASS/FAIL line per criterion and exits non-zero
// when any fails. `--report STEM` also writes STEM.json and
// STEM.criteria.csv; `--only 1,4` runs a subset.
//

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "mstk/descriptors.hpp"
#include "mstk/frames.hpp"
#include "mstk/harness.hpp"
#include "mstk/model_io.hpp"
#include "mstk/parallel.hpp"
#include "mstk/random.hpp"
#include "mstk/report.hpp"
#include "mstk/smiles.hpp"
#include "mstk/synth.hpp"
#include "mstk/vocab.hpp"
#include "mstk/vq.hpp"

#include "test_util.hpp"

using namespace mstk;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char *f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Outcome {
  int id;
  std::string name;
  bool pass;
  std::string detail;
  double seconds;
};

std::vector<Outcome> outcomes;

void record(int id, const std::string &name, bool pass,
            const std::string &detail, double seconds) {
  outcomes.push_back({ id, name, pass, detail, seconds });
  std::printf("%s  %d  %-22s %s [%.1f s]\n", pass ? "PASS" : "FAIL", id,
              name.c_str(), detail.c_str(), seconds);
  std::fflush(stdout);
}

constexpr FrameStrategy kStrategies[] = { FrameStrategy::kSeq1D,
                                          FrameStrategy::kTopo2D,
                                          FrameStrategy::kSpatial3D };

// 1. Descriptors under random rigid motions.
void se3_invariance(std::span<const LineMolecule> corpus) {
  const auto t0 = Clock::now();
  constexpr int kMotions = 10;
  const std::vector<double> drift =
      parallel_map<double>(corpus.size(), [&](std::size_t m) {
        const Molecule &mol = corpus[m].molecule;
        Rng rng(derive_seed(101, m));
        double worst = 0;
        std::vector<std::vector<DescriptorVec>> ref;
        for (FrameStrategy s: kStrategies)
          ref.push_back(molecule_descriptors(mol, s));
        for (int k = 0; k < kMotions; ++k) {
          const Eigen::Matrix3d r = test::random_rotation(rng);
          const Eigen::Vector3d t = test::random_translation(rng);
          const Molecule moved = mol.with_conformer(
              (r * mol.conformer()).colwise() + t);
          for (std::size_t s = 0; s < 3; ++s) {
            const auto d = molecule_descriptors(moved, kStrategies[s]);
            for (std::size_t i = 0; i < d.size(); ++i)
              worst = std::max(worst, (d[i] - ref[s][i]).cwiseAbs().maxCoeff());
          }
        }
        return worst;
      });
  const double worst = *std::max_element(drift.begin(), drift.end());
  const double secs = seconds_since(t0);
  record(1, "se3-invariance", worst < 1e-6 && secs < 60,
         std::to_string(corpus.size()) + " molecules x 10 motions x 3 "
             "strategies, max drift " + fmt("%.2e", worst) + " (< 1e-6)",
         secs);
}

// 2. Exact decode of exact encodings.
void exact_roundtrip(std::span<const LineMolecule> corpus) {
  const auto t0 = Clock::now();
  double worst = 0;
  std::size_t errors = 0;
  for (FrameStrategy s: kStrategies) {
    const auto recs = parallel_map<RoundtripRecord>(
        corpus.size(), [&](std::size_t m) { return roundtrip(corpus[m], s); });
    for (const auto &r: recs) {
      if (!r.error.empty() || !std::isfinite(r.exact_rmsd))
        ++errors;
      else
        worst = std::max(worst, r.exact_rmsd);
    }
  }
  const double secs = seconds_since(t0);
  record(2, "exact-roundtrip", errors == 0 && worst < 1e-9 && secs < 60,
         std::to_string(corpus.size()) + " molecules x 3 strategies, max "
             "aligned RMSD " + fmt("%.2e", worst) + " A (< 1e-9), "
             + std::to_string(errors) + " decode errors",
         secs);
}

// 3. Fraction of sub-angstrom reconstructions under descriptor noise.
void noise_ordering(std::span<const LineMolecule> corpus) {
  const auto t0 = Clock::now();
  NoiseStudyConfig cfg;
  cfg.seed = 7;
  const auto cells = noise_study(corpus, cfg);
  auto frac = [&](FrameStrategy s, double scale) {
    for (const auto &c: cells)
      if (c.strategy == s && c.scale == scale)
        return c.fraction;
    return std::nan("");
  };
  const double f1 = frac(FrameStrategy::kSeq1D, 0.1);
  const double f2 = frac(FrameStrategy::kTopo2D, 0.1);
  const double f3 = frac(FrameStrategy::kSpatial3D, 0.1);
  const double a = frac(FrameStrategy::kTopo2D, 0.01);
  const double b = frac(FrameStrategy::kTopo2D, 0.05);
  const bool order = f2 > f1 && f1 > f3;
  const bool monotone = a >= b && b >= f2;
  const double secs = seconds_since(t0);
  record(3, "noise-ordering", order && monotone && secs < 600,
         std::to_string(corpus.size()) + " molecules; at 0.1 2D "
             + fmt("%.4f", f2) + " 1D " + fmt("%.4f", f1) + " 3D "
             + fmt("%.4f", f3) + "; 2D over 0.01/0.05/0.1 " + fmt("%.4f", a)
             + "/" + fmt("%.4f", b) + "/" + fmt("%.4f", f2),
         secs);
}


// 4. Analytic gradients against central differences.
void gradients() {
  const auto t0 = Clock::now();
  MlpConfig c;
  c.latent_dim = 3;
  c.hidden_dim = 5;
  c.encoder_hidden_layers = 2;
  c.decoder_hidden_layers = 2;
  c.sign_hidden_layers = 2;
  double worst = 0;
  int checks = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed * 104729);
    for (bool head: { true, false }) {
      c.sign_head = head;
      const MlpParams p = init_params(c, seed);
      Matrix codes(4, 3);
      for (int i = 0; i < codes.size(); ++i)
        codes.data()[i] = rng.normal();
      Matrix batch(kDescriptorDim, 6);
      for (int j = 0; j < batch.cols(); ++j) {
        for (int k = 0; k < kDescriptorDim; ++k)
          batch(k, j) = rng.normal();
        batch(kSlotSign, j) = rng.uniform() < 0.5 ? -1.0 : 1.0;
      }
      LossOptions plain;
      plain.bypass_quantizer = true;
      LossOptions fixed;
      fixed.straight_through = false;
      fixed.beta = 0.4;
      for (const auto &o: { plain, fixed }) {
        worst = std::max(
            worst, test::gradient_error(p, make_codebook(codes), batch, o));
        ++checks;
      }
    }
  }
  const double secs = seconds_since(t0);
  record(4, "gradients", worst < 1e-4 && secs < 60,
         "20 seeds, " + std::to_string(checks)
             + " networks (encoder, decoder, sign head, commitment), max "
               "relative error " + fmt("%.2e", worst) + " (< 1e-4)",
         secs);
}

// 5, 6 and 9 share the desk-scale training runs.
struct EmaCheck {
  long steps = 0;
  double worst = 0;

  EmaObserver observer(double decay) {
    return [this, decay](std::size_t b, double before, double after) {
      const double expect = decay * before + (1.0 - decay) * double(b);
      worst = std::max(worst, std::abs(after - expect) / std::max(1.0, expect));
      ++steps;
    };
  }
};

void quantizer_runs(std::span<const DescriptorVec> data) {
  TrainConfig cfg; // defaults: K 256, 30 epochs, batch 512, lr 1e-4
  cfg.seed = 11;
  EmaCheck ema;

  auto t0 = Clock::now();
  const TrainResult full =
      train(data, cfg, FrameStrategy::kTopo2D, {}, ema.observer(cfg.ema_decay));
  TrainConfig ablation_cfg = cfg;
  ablation_cfg.mlp.sign_head = false;
  const TrainResult ablation = train(data, ablation_cfg, FrameStrategy::kTopo2D,
                                     {}, ema.observer(cfg.ema_decay));
  const double secs5 = seconds_since(t0);
  const QuantizerMetrics &m = full.report.final_metrics;
  const QuantizerMetrics &a = ablation.report.final_metrics;
  const bool quality = m.gen_length_rmsd <= 0.05 && m.gen_polar_rmsd <= 0.15
                       && m.gen_azimuth_rmsd <= 0.15;
  const double ratio = a.gen_azimuth_rmsd / m.gen_azimuth_rmsd;
  record(5, "quantizer-quality", quality && ratio >= 3 && secs5 < 1800,
         std::to_string(data.size()) + " descriptors, K 256, 30 epochs; "
             "length " + fmt("%.4f", m.gen_length_rmsd) + " A (<= 0.05), polar "
             + fmt("%.4f", m.gen_polar_rmsd) + " rad, azimuth "
             + fmt("%.4f", m.gen_azimuth_rmsd) + " rad (<= 0.15), sign "
             + fmt("%.4f", m.sign_accuracy) + ", used "
             + fmt("%.3f", m.utilization) + "; no sign head azimuth "
             + fmt("%.4f", a.gen_azimuth_rmsd) + " = " + fmt("%.2f", ratio)
             + "x (>= 3x)",
         secs5);

  // Identical seeds, identical bytes.
  t0 = Clock::now();
  TrainConfig small = cfg;
  small.codebook_size = 64;
  small.epochs = 3;
  small.warmup_epochs = 1;
  const std::span<const DescriptorVec> part =
      data.first(std::min<std::size_t>(data.size(), 20000));
  const std::string first =
      serialize_model(train(part, small, FrameStrategy::kTopo2D, {},
                            ema.observer(small.ema_decay))
                          .model);
  const std::string second =
      serialize_model(train(part, small, FrameStrategy::kTopo2D, {},
                            ema.observer(small.ema_decay))
                          .model);
  const bool same = first == second && !first.empty();
  record(6, "ema-determinism", same && ema.worst <= 1e-12,
         std::to_string(ema.steps) + " training steps, max relative error of "
             "the count identity " + fmt("%.2e", ema.worst)
             + " (<= 1e-12); two seed-11 runs "
             + (first == second ? "byte-identical (" : "differ (")
             + std::to_string(first.size()) + " bytes)",
         seconds_since(t0));

  // K sweep, same data and seed.
  t0 = Clock::now();
  TrainConfig k64 = cfg;
  k64.codebook_size = 64;
  const Quantizer q64(train(data, k64, FrameStrategy::kTopo2D).model);
  const Quantizer q256(full.model);
  const double r64 = std::sqrt(reconstruction_mse(q64, data));
  const double r256 = std::sqrt(reconstruction_mse(q256, data));
  record(9, "k-sweep", r256 <= r64,
         "normalized reconstruction RMSD K 256 " + fmt("%.4f", r256)
             + " <= K 64 " + fmt("%.4f", r64),
         seconds_since(t0));
}

void vocabulary() {
  const auto t0 = Clock::now();
  const std::vector<std::string> pool = { "C", "N", "O", "F", "H", "S",
                                          "P", "Cl", "Br", "c", "n", "o",
                                          "[NH3+]", "[O-]", "B", "I" };
  const std::vector<std::string> nonatoms = default_non_atom_symbols();
  Rng rng(77);
  int configs = 0;
  bool ok = true;
  for (; configs < 20; ++configs) {
    std::vector<std::string> a = pool, b = nonatoms;
    rng.shuffle(std::span(a));
    rng.shuffle(std::span(b));
    a.resize(1 + rng.index(a.size()));
    b.resize(1 + rng.index(b.size()));
    const int k = 1 + static_cast<int>(rng.index(512));
    const Vocab v(a, k, b);
    const long expect = static_cast<long>(a.size()) * k
                        + static_cast<long>(b.size())
                        + static_cast<long>(kConditionAlphabet.size())
                        + kSpecialCount;
    ok = ok && v.size() == expect;
    std::set<std::string> seen;
    for (int id = 0; id < v.size(); ++id) {
      const VocabEntry &e = v.entry(id);
      std::string key = std::to_string(int(e.kind)) + "|" + e.symbol + "|"
                        + std::to_string(e.code);
      ok = ok && seen.insert(key).second;
      if (e.kind == VocabEntryKind::kAtom)
        ok = ok && v.atom_id(e.symbol, e.code) == id;
      else if (e.kind == VocabEntryKind::kNonAtom)
        ok = ok && v.non_atom_id(e.symbol) == id;
    }
  }
  const std::vector<char> tok = tokenize_condition(-1.34);
  const bool example = tok == std::vector<char> { '-', '1', '.', '3', '4' };
  record(7, "vocabulary", ok && example,
         std::to_string(configs) + " random configurations match "
             "|A|K + |B| + 12 + 3 with bijective ids; tok(-1.34) = "
             + std::string(tok.begin(), tok.end()),
         seconds_since(t0));
}

void parser() {
  const auto t0 = Clock::now();
  const SmilesGenOptions opts = grammar_options();
  Rng rng(31337);
  int identical = 0;
  constexpr int kStrings = 12000;
  for (int n = 0; n < kStrings; ++n) {
    const std::string s = random_smiles(rng, opts);
    try {
      if (serialize(parse_smiles(s).sequence) == s)
        ++identical;
    } catch (const Error &) {
    }
  }
  struct Case {
    const char *text;
    SmilesErrorKind kind;
    std::size_t offset;
  };
  const Case cases[] = {
    { "C1CC", SmilesErrorKind::kUnclosedRing, 1 },
    { "CC(C", SmilesErrorKind::kUnbalancedParen, 2 },
    { "CC)C", SmilesErrorKind::kUnbalancedParen, 2 },
    { "CXC", SmilesErrorKind::kUnknownSymbol, 1 },
    { "[Xx]", SmilesErrorKind::kUnknownSymbol, 1 },
    { "FF(F)", SmilesErrorKind::kValenceOverflow, 1 },
    { "N#N#N", SmilesErrorKind::kValenceOverflow, 2 },
    { "c1cccc1", SmilesErrorKind::kKekulization, 0 },
    { "C.C", SmilesErrorKind::kDisconnected, 1 },
    { "C==C", SmilesErrorKind::kSyntax, 2 },
    { "C[C@H]C", SmilesErrorKind::kSyntax, 3 },
  };
  int matched = 0;
  for (const Case &c: cases) {
    try {
      parse_smiles(c.text);
    } catch (const SmilesError &e) {
      if (e.kind() == c.kind && e.offset() == c.offset)
        ++matched;
    }
  }
  const int n_cases = static_cast<int>(std::size(cases));
  record(8, "parser", identical == kStrings && matched == n_cases,
         std::to_string(identical) + "/" + std::to_string(kStrings)
             + " generated strings reproduce exactly; "
             + std::to_string(matched) + "/" + std::to_string(n_cases)
             + " error cases with kind and offset",
         seconds_since(t0));
}

} // namespace

int main(int argc, char **argv) {
  std::string report_stem;
  std::set<int> only;
  for (int i = 1; i + 1 < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--report") {
      report_stem = argv[i + 1];
    } else if (a == "--only") {
      // Comma-separated criterion numbers; 5, 6 and 9 always run together.
      std::string list = argv[i + 1];
      for (std::size_t pos = 0; pos < list.size();) {
        const std::size_t end = std::min(list.find(',', pos), list.size());
        only.insert(std::stoi(list.substr(pos, end - pos)));
        pos = end + 1;
      }
    }
  }
  auto wanted = [&](std::initializer_list<int> ids) {
    if (only.empty())
      return true;
    for (int id: ids)
      if (only.count(id))
        return true;
    return false;
  };

  const auto start = Clock::now();
  std::printf("threads %d\n", thread_count());

  // Desk corpus: grow until the 2D descriptors reach 50k.
  std::vector<LineMolecule> corpus;
  std::vector<DescriptorVec> data;
  if (wanted({ 1, 2, 3, 5, 6, 9 })) {
    const auto t0 = Clock::now();
    for (std::size_t count = 4800;; count += 400) {
      corpus = generate_corpus(count, 2026);
      data = corpus_descriptors(corpus, FrameStrategy::kTopo2D);
      if (data.size() >= 50000)
        break;
    }
    std::printf("corpus %zu molecules, %zu descriptors [%.1f s]\n",
                corpus.size(), data.size(), seconds_since(t0));
  }
  const std::span<const LineMolecule> first(
      corpus.data(), std::min<std::size_t>(1000, corpus.size()));

  if (wanted({ 1 }))
    se3_invariance(first);
  if (wanted({ 2 }))
    exact_roundtrip(first);
  if (wanted({ 3 }))
    noise_ordering(first);
  if (wanted({ 4 }))
    gradients();
  if (wanted({ 5, 6, 9 }))
    quantizer_runs(data);
  if (wanted({ 7 }))
    vocabulary();
  if (wanted({ 8 }))
    parser();

  std::sort(outcomes.begin(), outcomes.end(),
            [](const Outcome &a, const Outcome &b) { return a.id < b.id; });
  const auto failed =
      std::count_if(outcomes.begin(), outcomes.end(),
                    [](const Outcome &o) { return !o.pass; });
  std::printf("%zu/%zu criteria pass [%.1f s]\n", outcomes.size() - failed,
              outcomes.size(), seconds_since(start));

  if (!report_stem.empty()) {
    RunReport r;
    r.command = "acceptance";
    r.config = { { "corpus_seed", 2026 }, { "molecules", corpus.size() },
                 { "descriptors", data.size() } };
    Table &t = r.table("criteria");
    t.columns = { "criterion", "name", "pass", "seconds", "detail" };
    for (const auto &o: outcomes)
      t.add({ o.id, o.name, o.pass, o.seconds, o.detail });
    r.summary = { { "passed", outcomes.size() - failed },
                  { "failed", failed } };
    r.wall_clock_seconds = seconds_since(start);
    write_report(r, report_stem);
  }
  return failed == 0 ? 0 : 1;
}
