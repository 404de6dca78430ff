//
// mstk - Copyright 2026 The mstk Authors.
// SPDX-License-Identifier: Apache-2.0
//

// mstk command-line tool: corpus conversion, quantizer training, round-trip
// evaluation, noise study and codebook statistics.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mstk/error.hpp"
#include "mstk/harness.hpp"
#include "mstk/log.hpp"
#include "mstk/model_io.hpp"
#include "mstk/parallel.hpp"
#include "mstk/report.hpp"
#include "mstk/synth.hpp"
#include "mstk/vocab.hpp"

namespace fs = std::filesystem;
using namespace mstk;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  std::string strategy = "2d";
  std::string codebook;
  std::string format; // empty: by extension
  bool strict = false;
  bool verbose = false;
  std::string report; // output stem
};

struct Named {
  std::string name;
  LineMolecule mol;
};

/// Exit code 1 signals input failures under --strict.
struct StrictFailure { };

std::string format_for(const fs::path &p, const std::string &forced) {
  if (!forced.empty())
    return forced;
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  if (ext == ".xyz")
    return "xyz";
  if (ext == ".mol" || ext == ".sdf" || ext == ".sd")
    return "mol";
  if (ext == ".smi" || ext == ".smiles" || ext == ".txt")
    return "smiles";
  throw Error("cannot tell the format of " + p.string() + "; use --format");
}

std::vector<fs::path> expand_inputs(const std::vector<std::string> &inputs) {
  std::vector<fs::path> out;
  for (const auto &in: inputs) {
    fs::path p(in);
    if (fs::is_directory(p)) {
      std::vector<fs::path> files;
      for (const auto &e: fs::directory_iterator(p))
        if (e.is_regular_file())
          files.push_back(e.path());
      std::sort(files.begin(), files.end(),
                [](const fs::path &a, const fs::path &b) {
                  return a.filename().string() < b.filename().string();
                });
      out.insert(out.end(), files.begin(), files.end());
    } else {
      out.push_back(p);
    }
  }
  return out;
}

/// SMILES lines carry no geometry; they are embedded with the force field
/// used for the synthetic corpus, seeded by (seed, line number).
std::vector<Named> read_one(const fs::path &p, const Globals &g) {
  const std::string fmt = format_for(p, g.format);
  const std::string text = read_file(p);
  const std::string stem = p.filename().string();
  std::vector<Named> out;
  if (fmt == "xyz") {
    out.push_back({ stem, line_molecule(read_xyz(text)) });
  } else if (fmt == "mol") {
    const auto mols = read_sdf(text);
    const auto titles = read_sdf_titles(text);
    for (std::size_t k = 0; k < mols.size(); ++k) {
      std::string name = mols.size() == 1 ? stem
                                          : stem + "#" + std::to_string(k + 1);
      if (!titles[k].empty() && mols.size() > 1)
        name += " " + titles[k];
      out.push_back({ name, line_molecule(mols[k]) });
    }
  } else if (fmt == "smiles") {
    std::istringstream in(text);
    std::string line;
    std::uint64_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      std::istringstream fields(line);
      std::string smi;
      if (!(fields >> smi) || smi[0] == '#')
        continue;
      ParsedSmiles ps = parse_smiles(smi);
      auto x = embed(ps.molecule, derive_seed(g.seed, n));
      if (!x)
        throw Error(stem + ":" + std::to_string(n) + ": embedding failed for "
                    + smi);
      out.push_back({ stem + ":" + std::to_string(n),
                      { ps.molecule.with_conformer(std::move(*x)),
                        std::move(ps.sequence) } });
    }
  } else {
    throw Error("unknown format " + fmt);
  }
  return out;
}

std::vector<Named> load_inputs(const std::vector<std::string> &inputs,
                               const Globals &g, std::size_t *failures) {
  std::vector<Named> out;
  std::size_t failed = 0;
  for (const auto &p: expand_inputs(inputs)) {
    try {
      auto part = read_one(p, g);
      for (auto &m: part)
        out.push_back(std::move(m));
    } catch (const std::exception &e) {
      ++failed;
      std::cerr << (g.strict ? "error: " : "warning: skipping ") << p.string()
                << ": " << e.what() << "\n";
    }
  }
  if (failures)
    *failures = failed;
  if (failed && g.strict)
    throw StrictFailure {};
  return out;
}

/// Input files, or a synthetic corpus when `synthetic` > 0.
std::vector<Named> load_corpus(const std::vector<std::string> &inputs,
                               std::size_t synthetic, const Globals &g) {
  if (synthetic > 0) {
    if (!inputs.empty())
      throw Error("give either input files or --synthetic, not both");
    auto corpus = generate_corpus(synthetic, g.seed);
    std::vector<Named> out;
    for (std::size_t i = 0; i < corpus.size(); ++i)
      out.push_back({ "synthetic:" + std::to_string(i),
                      std::move(corpus[i]) });
    return out;
  }
  return load_inputs(inputs, g, nullptr);
}

std::vector<LineMolecule> molecules(const std::vector<Named> &named) {
  std::vector<LineMolecule> out;
  for (const auto &n: named)
    out.push_back(n.mol);
  return out;
}

Quantizer open_codebook(const Globals &g, const CLI::App &app) {
  if (g.codebook.empty())
    throw Error("--codebook is required");
  QuantizerModel model = load_model(g.codebook);
  if (app.get_option("--strategy")->count() > 0
      && parse_strategy(g.strategy) != model.strategy)
    throw Error("codebook was trained for strategy "
                + std::string(to_string(model.strategy)) + ", not "
                + g.strategy);
  return Quantizer(std::move(model));
}

void emit(const std::string &path, const std::string &text) {
  if (path.empty() || path == "-")
    std::cout << text;
  else
    write_file(path, text);
}

nlohmann::json base_config(const Globals &g, std::string_view command) {
  return { { "command", command }, { "seed", g.seed } };
}

void finish(RunReport &r, const Globals &g,
            std::chrono::steady_clock::time_point t0) {
  r.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  if (!g.report.empty())
    write_report(r, g.report);
  std::cout << r.summary.dump(2) << "\n";
  std::cout << "config_hash " << r.config_hash() << "\n";
}

nlohmann::json summary_json(const Summary &s) {
  return { { "count", s.count }, { "mean", s.mean }, { "median", s.median },
           { "p95", s.p95 },     { "max", s.max } };
}

nlohmann::json metrics_json(const QuantizerMetrics &m) {
  return { { "samples", m.samples },
           { "gen_length_rmsd", m.gen_length_rmsd },
           { "gen_polar_rmsd", m.gen_polar_rmsd },
           { "gen_azimuth_rmsd", m.gen_azimuth_rmsd },
           { "sign_accuracy", m.sign_accuracy },
           { "und_length_rmsd", m.und_length_rmsd },
           { "und_angle_rmsd", m.und_angle_rmsd },
           { "utilization", m.utilization } };
}

std::vector<double> parse_list(const std::string &s) {
  std::vector<double> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ','))
    out.push_back(std::stod(item));
  return out;
}

std::string input_digest(const std::vector<Named> &corpus) {
  std::string all;
  for (const auto &n: corpus)
    all += n.name + "\n" + write_xyz(n.mol.molecule);
  return fnv1a_hex(all);
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app { "mstk: SE(3)-invariant line-notation structure tokens" };
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random choice");
  app.add_option("--strategy", g.strategy, "Frame strategy: 1d, 2d or 3d")
      ->check(CLI::IsMember({ "1d", "2d", "3d" }));
  app.add_option("--codebook", g.codebook, "Trained quantizer file");
  app.add_option("--format", g.format, "Input format (default: extension)")
      ->check(CLI::IsMember({ "xyz", "mol", "smiles" }));
  app.add_flag("--strict", g.strict, "Fail when any input file fails");
  app.add_flag("-v,--verbose", g.verbose, "Progress messages on stderr");
  app.add_option("--report", g.report,
                 "Write <stem>.json and <stem>.<table>.csv");

  std::vector<std::string> inputs;
  std::string output;
  std::size_t synthetic = 0;

  // encode
  auto *enc = app.add_subcommand("encode", "Molecules to symbol:code lines");
  enc->add_option("inputs", inputs, "Files or directories")->required();
  enc->add_option("-o,--output", output, "Output file (default stdout)");
  std::string vocab_path;
  enc->add_option("--vocab", vocab_path,
                  "Also write token ids; the vocabulary JSON goes here");
  std::optional<double> condition;
  enc->add_option("--condition", condition, "Condition value for every line");

  // decode
  auto *dec = app.add_subcommand("decode", "symbol:code lines to 3D");
  std::string token_file;
  dec->add_option("tokens", token_file, "Token file (- for stdin)")->required();
  dec->add_option("-o,--output", output, "Output file (default stdout)");
  std::string out_format = "sdf";
  dec->add_option("--out-format", out_format, "sdf or xyz")
      ->check(CLI::IsMember({ "sdf", "xyz" }));
  dec->add_option("--vocab", vocab_path,
                  "Read token-id lines with this vocabulary");

  // roundtrip
  auto *rt = app.add_subcommand("roundtrip", "Exact and quantized RMSD");
  rt->add_option("inputs", inputs, "Files or directories");
  rt->add_option("--synthetic", synthetic, "Use N synthetic molecules");

  // train
  auto *tr = app.add_subcommand("train", "Train a quantizer");
  tr->add_option("inputs", inputs, "Files or directories");
  tr->add_option("--synthetic", synthetic, "Use N synthetic molecules");
  tr->add_option("-o,--output", output, "Model file");
  TrainConfig tc;
  tr->add_option("--k", tc.codebook_size, "Codebook size")
      ->check(CLI::Range(2, 1 << 20));
  tr->add_option("--epochs", tc.epochs, "Passes over the data")
      ->check(CLI::PositiveNumber);
  tr->add_option("--batch", tc.batch_size, "Descriptors per step")
      ->check(CLI::PositiveNumber);
  tr->add_option("--lr", tc.learning_rate, "Adam step after warmup")
      ->check(CLI::PositiveNumber);
  tr->add_option("--warmup", tc.warmup_epochs, "Linear ramp, in epochs")
      ->check(CLI::NonNegativeNumber);
  tr->add_option("--beta", tc.beta, "Commitment weight")
      ->check(CLI::NonNegativeNumber);
  tr->add_option("--decay", tc.ema_decay, "Codebook EMA decay")
      ->check(CLI::Range(0.0, 1.0));
  bool no_sign_head = false;
  tr->add_flag("--no-sign-head", no_sign_head,
               "Regress the sign instead of classifying it");
  std::string json_export;
  tr->add_option("--json", json_export, "Also export the model as JSON");
  std::string sweep;
  tr->add_option("--sweep", sweep,
                 "Comma-separated K values; reports metrics per K");

  // noise-study
  auto *ns = app.add_subcommand("noise-study", "Descriptor noise robustness");
  ns->add_option("inputs", inputs, "Files or directories");
  ns->add_option("--synthetic", synthetic, "Use N synthetic molecules");
  std::string scales = "0.01,0.05,0.1";
  ns->add_option("--scales", scales, "Comma-separated noise scales");
  std::string strategies = "1d,2d,3d";
  ns->add_option("--strategies", strategies, "Comma-separated strategies");
  NoiseStudyConfig nc;
  ns->add_option("--threshold", nc.rmsd_threshold, "RMSD threshold, Angstrom")
      ->check(CLI::PositiveNumber);
  ns->add_option("--samples", nc.sample_count, "Use the first N molecules");
  std::string noise_space = "normalized";
  ns->add_option("--noise-space", noise_space)
      ->check(CLI::IsMember({ "normalized", "raw" }));

  // stats
  auto *st = app.add_subcommand("stats", "Per-code values and hit matrix");
  st->add_option("inputs", inputs, "Files or directories");
  st->add_option("--synthetic", synthetic, "Use N synthetic molecules");

  // synth
  auto *sy = app.add_subcommand("synth", "Write a synthetic SDF corpus");
  std::size_t count = 100;
  sy->add_option("count", count, "Number of molecules")->required();
  sy->add_option("-o,--output", output, "Output SDF (default stdout)");

  CLI11_PARSE(app, argc, argv);
  if (g.verbose)
    set_log_level(LogLevel::kInfo);
  const auto t0 = std::chrono::steady_clock::now();

  try {
    if (*enc) {
      Quantizer q = open_codebook(g, app);
      std::size_t failures = 0;
      auto corpus = load_inputs(inputs, g, &failures);
      std::vector<StructSequence> seqs;
      std::vector<LineSequence> lines;
      for (auto &n: corpus) {
        try {
          seqs.push_back(structure_to_sequence(n.mol, q));
          lines.push_back(n.mol.sequence);
        } catch (const Error &e) {
          ++failures;
          std::cerr << (g.strict ? "error: " : "warning: skipping ") << n.name
                    << ": " << e.what() << "\n";
          if (g.strict)
            throw StrictFailure {};
        }
      }
      std::string text;
      if (vocab_path.empty()) {
        for (const auto &s: seqs)
          text += format_struct_line(s, condition) + "\n";
      } else {
        auto [atoms, non_atoms] = collect_symbols(lines);
        for (auto &s: default_non_atom_symbols())
          if (std::find(non_atoms.begin(), non_atoms.end(), s)
              == non_atoms.end())
            non_atoms.push_back(s);
        std::sort(non_atoms.begin(), non_atoms.end());
        if (atoms.empty())
          throw Error("no molecules to build a vocabulary from");
        Vocab v = build_vocab(atoms, q.size(), non_atoms);
        write_file(vocab_path, v.to_json() + "\n");
        for (const auto &s: seqs) {
          const auto ids = encode_sequence(s, v, condition);
          for (std::size_t i = 0; i < ids.size(); ++i)
            text += (i ? " " : "") + std::to_string(ids[i]);
          text += "\n";
        }
      }
      emit(output, text);
      return 0;
    }

    if (*dec) {
      Quantizer q = open_codebook(g, app);
      std::string text;
      if (token_file == "-") {
        std::ostringstream ss;
        ss << std::cin.rdbuf();
        text = ss.str();
      } else {
        text = read_file(token_file);
      }
      std::optional<Vocab> vocab;
      if (!vocab_path.empty())
        vocab = Vocab::from_json(read_file(vocab_path));
      std::istringstream in(text);
      std::string line;
      std::vector<Molecule> mols;
      std::vector<std::string> titles;
      int n = 0;
      bool failed = false;
      while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
          continue;
        try {
          LineMolecule lm;
          std::string title;
          if (vocab) {
            std::istringstream f(line);
            std::vector<int> ids;
            int id;
            while (f >> id)
              ids.push_back(id);
            lm = sequence_to_structure(ids, *vocab, q);
            title = lm.sequence.source_text;
          } else {
            StructLine sl = parse_struct_line(line);
            lm = sequence_to_structure(sl.sequence, q);
            title = line_text(sl.sequence);
          }
          mols.push_back(std::move(lm.molecule));
          titles.push_back(title);
        } catch (const Error &e) {
          failed = true;
          std::cerr << (g.strict ? "error: " : "warning: skipping ") << "line "
                    << n << ": " << e.what() << "\n";
          if (g.strict)
            throw StrictFailure {};
        }
      }
      std::string out;
      if (out_format == "sdf") {
        out = write_sdf(mols, titles);
      } else {
        for (std::size_t i = 0; i < mols.size(); ++i)
          out += write_xyz(mols[i], titles[i]);
      }
      emit(output, out);
      return failed && g.strict ? 1 : 0;
    }

    if (*rt) {
      auto corpus = load_corpus(inputs, synthetic, g);
      std::optional<Quantizer> q;
      if (!g.codebook.empty())
        q.emplace(open_codebook(g, app));
      const FrameStrategy strategy =
          q ? q->strategy() : parse_strategy(g.strategy);
      auto recs = parallel_map<RoundtripRecord>(corpus.size(), [&](std::size_t i) {
        RoundtripRecord r = roundtrip(corpus[i].mol, strategy, q ? &*q : nullptr);
        r.name = corpus[i].name;
        return r;
      });
      RunReport r;
      r.command = "roundtrip";
      r.config = base_config(g, "roundtrip");
      r.config["strategy"] = to_string(strategy);
      r.config["codebook"] = g.codebook;
      r.config["synthetic"] = synthetic;
      r.config["inputs"] = input_digest(corpus);
      Table &t = r.table("molecules");
      t.columns = { "name", "atoms", "exact_rmsd", "exact_gauge_rmsd",
                    "quantized_rmsd", "quantized_gauge_rmsd", "error" };
      std::vector<double> ex, qa, qg;
      for (const auto &rec: recs) {
        t.add({ rec.name, rec.atoms, rec.exact_rmsd, rec.exact_gauge_rmsd,
                rec.quantized_rmsd ? nlohmann::json(*rec.quantized_rmsd)
                                   : nlohmann::json(nullptr),
                rec.quantized_gauge_rmsd
                    ? nlohmann::json(*rec.quantized_gauge_rmsd)
                    : nlohmann::json(nullptr),
                rec.error });
        ex.push_back(rec.exact_rmsd);
        if (rec.quantized_rmsd) {
          qa.push_back(*rec.quantized_rmsd);
          qg.push_back(*rec.quantized_gauge_rmsd);
        }
      }
      r.summary["molecules"] = recs.size();
      r.summary["exact_rmsd"] = summary_json(summarize(ex));
      if (q) {
        r.summary["quantized_rmsd"] = summary_json(summarize(qa));
        r.summary["quantized_gauge_rmsd"] = summary_json(summarize(qg));
      }
      finish(r, g, t0);
      return 0;
    }

    if (*tr) {
      auto corpus = load_corpus(inputs, synthetic, g);
      const FrameStrategy strategy = parse_strategy(g.strategy);
      tc.seed = g.seed;
      tc.mlp.sign_head = !no_sign_head;
      const auto mols = molecules(corpus);
      const auto data = corpus_descriptors(mols, strategy);
      RunReport r;
      r.command = "train";
      r.config = base_config(g, "train");
      r.config["strategy"] = to_string(strategy);
      r.config["synthetic"] = synthetic;
      r.config["inputs"] = input_digest(corpus);
      r.config["train"] = { { "k", tc.codebook_size },
                            { "epochs", tc.epochs },
                            { "batch", tc.batch_size },
                            { "lr", tc.learning_rate },
                            { "warmup_epochs", tc.warmup_epochs },
                            { "beta", tc.beta },
                            { "ema_decay", tc.ema_decay },
                            { "sign_head", tc.mlp.sign_head } };
      r.summary["molecules"] = corpus.size();
      r.summary["descriptors"] = data.size();
      if (!sweep.empty()) {
        std::vector<int> ks;
        for (double k: parse_list(sweep))
          ks.push_back(static_cast<int>(k));
        r.config["sweep"] = ks;
        Table &t = r.table("sweep");
        t.columns = { "k",
                      "reconstruction_rmsd",
                      "gen_length_rmsd",
                      "gen_polar_rmsd",
                      "gen_azimuth_rmsd",
                      "sign_accuracy",
                      "utilization" };
        for (const auto &p: k_sweep(data, tc, ks, strategy))
          t.add({ p.k, std::sqrt(p.reconstruction), p.metrics.gen_length_rmsd,
                  p.metrics.gen_polar_rmsd, p.metrics.gen_azimuth_rmsd,
                  p.metrics.sign_accuracy, p.metrics.utilization });
        finish(r, g, t0);
        return 0;
      }
      if (output.empty())
        throw Error("train needs -o/--output");
      TrainResult res = train(data, tc, strategy, [&](const EpochStats &e) {
        log_info("epoch " + std::to_string(e.epoch) + " loss "
                 + std::to_string(e.loss) + " utilization "
                 + std::to_string(e.utilization));
      });
      save_model(res.model, output);
      if (!json_export.empty())
        write_file(json_export, model_to_json(res.model) + "\n");
      Table &t = r.table("epochs");
      t.columns = { "epoch",      "learning_rate", "loss",       "reconstruction",
                    "sign_bce",   "commitment",    "utilization", "reseeded" };
      for (const auto &e: res.report.epochs)
        t.add({ e.epoch, e.learning_rate, e.loss, e.reconstruction, e.sign_bce,
                e.commitment, e.utilization, e.reseeded });
      r.summary["parameters"] = res.report.parameters;
      r.summary["metrics"] = metrics_json(res.report.final_metrics);
      r.summary["model_digest"] = fnv1a_hex(serialize_model(res.model));
      finish(r, g, t0);
      return 0;
    }

    if (*ns) {
      auto corpus = load_corpus(inputs, synthetic, g);
      nc.seed = g.seed;
      nc.noise_scales = parse_list(scales);
      nc.strategies.clear();
      std::stringstream ss(strategies);
      std::string item;
      while (std::getline(ss, item, ','))
        nc.strategies.push_back(parse_strategy(item));
      nc.space = noise_space == "raw" ? NoiseSpace::kRaw
                                      : NoiseSpace::kNormalized;
      const auto cells = noise_study(molecules(corpus), nc);
      RunReport r;
      r.command = "noise-study";
      r.config = base_config(g, "noise-study");
      r.config["synthetic"] = synthetic;
      r.config["inputs"] = input_digest(corpus);
      r.config["scales"] = nc.noise_scales;
      r.config["strategies"] = strategies;
      r.config["threshold"] = nc.rmsd_threshold;
      r.config["samples"] = nc.sample_count;
      r.config["noise_space"] = noise_space;
      Table &t = r.table("fractions");
      t.columns = { "strategy",     "scale",          "samples",
                    "below",        "failed",         "fraction",
                    "median_rmsd",  "p95_rmsd",       "median_gauge_rmsd" };
      for (const auto &c: cells) {
        t.add({ to_string(c.strategy), c.scale, c.samples, c.below, c.failed,
                c.fraction, c.aligned.median, c.aligned.p95, c.gauge.median });
        r.summary[std::string(to_string(c.strategy))][std::to_string(c.scale)] =
            c.fraction;
      }
      finish(r, g, t0);
      return 0;
    }

    if (*st) {
      Quantizer q = open_codebook(g, app);
      auto corpus = load_corpus(inputs, synthetic, g);
      const HitMatrix h = hit_matrix(molecules(corpus), q);
      RunReport r;
      r.command = "stats";
      r.config = base_config(g, "stats");
      r.config["codebook"] = fnv1a_hex(read_file(g.codebook));
      r.config["synthetic"] = synthetic;
      r.config["inputs"] = input_digest(corpus);
      Table &codes = r.table("codes");
      codes.columns = { "code", "d", "theta", "abs_phi", "sign" };
      for (const auto &c: code_table(q))
        codes.add({ c.code, c.d, c.theta, c.abs_phi, c.sign });
      Table &hits = r.table("hits");
      Table &logp = r.table("log_prob");
      hits.columns = { "type" };
      for (int k = 0; k < q.size(); ++k)
        hits.columns.push_back(std::to_string(k));
      logp.columns = hits.columns;
      const auto lp = h.log_prob();
      for (std::size_t t = 0; t < h.types.size(); ++t) {
        std::vector<nlohmann::json> row { h.types[t] }, lrow { h.types[t] };
        for (int k = 0; k < q.size(); ++k) {
          row.push_back(h.counts[t][k]);
          lrow.push_back(lp[t][k]);
        }
        hits.add(std::move(row));
        logp.add(std::move(lrow));
        r.summary["atoms"][h.types[t]] = h.type_total(t);
      }
      r.summary["utilization"] = h.utilization();
      finish(r, g, t0);
      return 0;
    }

    if (*sy) {
      auto corpus = generate_corpus(count, g.seed);
      std::vector<Molecule> mols;
      std::vector<std::string> titles;
      for (auto &lm: corpus) {
        titles.push_back(lm.sequence.source_text);
        mols.push_back(std::move(lm.molecule));
      }
      emit(output, write_sdf(mols, titles));
      return 0;
    }
  } catch (const StrictFailure &) {
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
