#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "csgen/checkpoint.hpp"
#include "csgen/cmi.hpp"
#include "csgen/cyclegan.hpp"
#include "csgen/lm.hpp"
#include "csgen/synth.hpp"

namespace csgen {

inline constexpr const char* kToolkitVersion = "1.0.0";
inline constexpr int kManifestVersion = 1;

inline std::string fixed(double v, int prec) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << content;
  if (!out) throw DataError("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Manifest written alongside every command's outputs: a config snapshot
// plus seed and versions, and nothing time-dependent, so a rerun from the
// same manifest reproduces outputs bit-identically on one platform.
inline void write_manifest(const std::string& path, const std::string& command,
                           const nlohmann::ordered_json& config, std::uint64_t seed) {
  nlohmann::ordered_json j;
  j["format"] = "csgen-manifest";
  j["version"] = kManifestVersion;
  j["toolkit_version"] = kToolkitVersion;
  j["checkpoint_version"] = nn::kCheckpointVersion;
  j["command"] = command;
  j["seed"] = seed;
  j["config"] = config;
  write_text_file(path, j.dump(2) + "\n");
}

inline nlohmann::json load_json_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open config file: " + path);
  try {
    nlohmann::json j;
    in >> j;
    if (!j.is_object()) throw DataError("config root must be a JSON object: " + path);
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed config " + path + ": " + e.what());
  }
}

// Vocabulary file: one surface per line in id order, reserved ids implied.
inline void save_vocab(const Vocabulary& vocab, const std::string& path) {
  std::ostringstream out;
  for (std::uint32_t id = 4; id < vocab.size(); ++id) out << vocab.surface_of(id) << '\n';
  write_text_file(path, out.str());
}

inline Vocabulary load_vocab(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open vocabulary file: " + path);
  Vocabulary vocab;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) vocab.add(line);
  return vocab;
}

// ---------------------------------------------------------------------------
// Pair files: `source<TAB>target` per line, token-level text on each side.

inline void save_pairs(const std::vector<std::pair<Sentence, Sentence>>& pairs,
                       const std::string& path) {
  std::ostringstream out;
  for (const auto& [src, dst] : pairs) out << src.text() << '\t' << dst.text() << '\n';
  write_text_file(path, out.str());
}

inline std::vector<std::pair<Sentence, Sentence>> load_pairs(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open pair file: " + path);
  std::vector<std::pair<Sentence, Sentence>> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError("pair file " + path + " line " + std::to_string(line_no) +
                      ": missing tab separator");
    pairs.emplace_back(tokenize(line.substr(0, tab)), tokenize(line.substr(tab + 1)));
  }
  return pairs;
}

// ---------------------------------------------------------------------------
// CMI report: fixed bin order ZH-C1..C5, EN-C1..C5, EMPTY, percentages at
// two decimals, as aligned text and as JSON.

inline std::string cmi_report_text(const Corpus& corpus) {
  const CmiHistogram hist = histogram(corpus);
  std::ostringstream out;
  out << "corpus: " << corpus.name << "\n";
  out << "sentences: " << corpus.size() << "\n";
  out << "bin      percent\n";
  for (std::size_t bin = 0; bin < CmiHistogram::kBins; ++bin) {
    std::string label = CmiHistogram::bin_label(bin);
    label.resize(9, ' ');
    out << label << fixed(hist.mass[bin] * 100.0, 2) << "\n";
  }
  return out.str();
}

inline nlohmann::ordered_json cmi_report_json(const Corpus& corpus) {
  const CmiHistogram hist = histogram(corpus);
  nlohmann::ordered_json j;
  j["corpus"] = corpus.name;
  j["sentences"] = corpus.size();
  nlohmann::ordered_json bins = nlohmann::ordered_json::array();
  for (std::size_t bin = 0; bin < CmiHistogram::kBins; ++bin) {
    nlohmann::ordered_json b;
    b["label"] = CmiHistogram::bin_label(bin);
    // two-decimal percentage, matching the text table
    b["percent"] = std::round(hist.mass[bin] * 10000.0) / 100.0;
    bins.push_back(std::move(b));
  }
  j["bins"] = std::move(bins);
  return j;
}

// ---------------------------------------------------------------------------
// CycleGAN loss log as CSV.

inline std::string loss_csv(const std::vector<LossReport>& log) {
  std::ostringstream out;
  out << "step,adv_G,adv_F,cyc_X,cyc_Y,disc_X,disc_Y,total\n";
  for (std::size_t step = 0; step < log.size(); ++step) {
    const LossReport& r = log[step];
    out << step << ',' << fixed(r.adv_g, 6) << ',' << fixed(r.adv_f, 6) << ','
        << fixed(r.cyc_x, 6) << ',' << fixed(r.cyc_y, 6) << ',' << fixed(r.disc_x, 6) << ','
        << fixed(r.disc_y, 6) << ',' << fixed(r.total, 6) << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// A/B augmentation experiment over two held-out sets, shaped like Table 2:
// one baseline arm plus one arm per generated corpus, every arm trained
// with the identical seed and schedule on a shared union vocabulary.

struct AbArmResult {
  std::string arm;
  double dev_ppl = 0.0;
  double eval_ppl = 0.0;
};

inline std::vector<AbArmResult> ab_experiment(
    const Corpus& base, const std::vector<std::pair<std::string, Corpus>>& generated_arms,
    const Corpus& dev, const Corpus& eval_set, AugmentationConfig cfg) {
  if (base.empty()) throw DataError("ab_experiment: empty base corpus");
  if (dev.empty() || eval_set.empty()) throw DataError("ab_experiment: empty held-out corpus");

  std::vector<const Corpus*> all = {&base, &dev, &eval_set};
  for (const auto& [name, corpus] : generated_arms) all.push_back(&corpus);
  const Vocabulary vocab = build_vocab(all, 1);
  cfg.model.vocab = vocab.size();

  auto to_ids = [&](const Corpus& c) {
    std::vector<IdSeq> out;
    out.reserve(c.size());
    for (const Sentence& s : c.sentences) out.push_back(encode(s, vocab, false));
    return out;
  };
  const auto base_ids = to_ids(base);
  const auto dev_ids = to_ids(dev);
  const auto eval_ids = to_ids(eval_set);

  auto run_arm = [&](const std::string& name, const std::vector<IdSeq>& text) {
    LanguageModel model(cfg.model);
    train_lm(model, text, cfg.train);
    AbArmResult r;
    r.arm = name;
    r.dev_ppl = perplexity(model, dev_ids, "dev").ppl;
    r.eval_ppl = perplexity(model, eval_ids, "eval").ppl;
    return r;
  };

  std::vector<AbArmResult> results;
  results.push_back(run_arm("baseline", base_ids));
  for (const auto& [name, corpus] : generated_arms) {
    std::vector<IdSeq> text = base_ids;
    for (const Sentence& s : corpus.sentences) text.push_back(encode(s, vocab, false));
    results.push_back(run_arm(name, text));
  }
  return results;
}

inline std::string ab_report_text(const std::vector<AbArmResult>& results) {
  std::size_t width = 8;
  for (const AbArmResult& r : results) width = std::max(width, r.arm.size() + 2);
  std::ostringstream out;
  std::string head = "arm";
  head.resize(width, ' ');
  out << head << "dev_ppl   eval_ppl\n";
  for (const AbArmResult& r : results) {
    std::string arm = r.arm;
    arm.resize(width, ' ');
    out << arm << fixed(r.dev_ppl, 4) << "   " << fixed(r.eval_ppl, 4) << "\n";
  }
  return out.str();
}

inline std::string ab_report_csv(const std::vector<AbArmResult>& results) {
  std::ostringstream out;
  out << "arm,dev_ppl,eval_ppl\n";
  for (const AbArmResult& r : results)
    out << r.arm << ',' << fixed(r.dev_ppl, 4) << ',' << fixed(r.eval_ppl, 4) << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Lambda sweep, shaped like Table 6: lambda2 rows, lambda1 columns. Each
// cell trains its own model end to end with a seed derived from the cell
// index, so cells are independent and may run on parallel threads; the
// result vector is always in grid order (row-major over lambda2 rows).

struct SweepConfig {
  std::vector<double> grid_l1 = {0.0, 0.1, 0.2, 0.3, 0.4};
  std::vector<double> grid_l2 = {0.5, 0.6, 0.7, 0.8, 0.9};
  CycleGanConfig model;  // lambdas overwritten per cell
  SubstitutionPolicy policy;
  S2STrainConfig pretrain;
  CycleGanTrainConfig train;
  AugmentationConfig lm;
  std::size_t jobs = 1;
  std::uint64_t seed = 0;
};

struct SweepCell {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double ppl = 0.0;
};

// mono: source-side X corpus (input to G). cs_target: real Y corpus, used
// both as adversarial real data and as the LM base text. heldout: CS text
// the per-cell downstream LM is evaluated on.
inline std::vector<SweepCell> lambda_sweep(const Corpus& mono, const Corpus& cs_target,
                                           const Corpus& heldout,
                                           const TranslationLexicon& lexicon,
                                           const SweepConfig& cfg) {
  if (cfg.grid_l1.empty() || cfg.grid_l2.empty()) throw DataError("lambda_sweep: empty grid");
  if (mono.empty() || cs_target.empty() || heldout.empty())
    throw DataError("lambda_sweep: empty corpus");

  const Vocabulary vocab = build_vocab({&mono, &cs_target, &heldout}, 1);
  SubstitutionPolicy policy = cfg.policy;
  policy.seed = derive_seed(cfg.seed, "sweep:pairs");
  const auto sentence_pairs = make_pairs(mono, lexicon, policy);
  const auto pairs_xy = encode_pairs(sentence_pairs, vocab);
  std::vector<std::pair<IdSeq, IdSeq>> pairs_yx;
  pairs_yx.reserve(pairs_xy.size());
  for (const auto& [x, y] : pairs_xy) pairs_yx.emplace_back(y, x);
  std::vector<IdSeq> corpus_x, corpus_y;
  for (const Sentence& s : mono.sentences) corpus_x.push_back(encode(s, vocab, false));
  for (const Sentence& s : cs_target.sentences) corpus_y.push_back(encode(s, vocab, false));

  const std::size_t cells = cfg.grid_l2.size() * cfg.grid_l1.size();
  std::vector<SweepCell> results(cells);

  auto run_cell = [&](std::size_t index) {
    const std::size_t row = index / cfg.grid_l1.size();
    const std::size_t col = index % cfg.grid_l1.size();
    const std::uint64_t cell_seed = derive_seed(cfg.seed, "sweep:cell", index);

    CycleGanConfig mc = cfg.model;
    mc.vocab = vocab.size();
    mc.lambda1 = cfg.grid_l1[col];
    mc.lambda2 = cfg.grid_l2[row];
    mc.seed = derive_seed(cell_seed, "model");

    S2STrainConfig pc = cfg.pretrain;
    pc.seed = derive_seed(cell_seed, "pretrain");
    CycleGanModel model = pretrain(pairs_xy, pairs_yx, mc, pc);

    CycleGanTrainConfig tc = cfg.train;
    tc.seed = derive_seed(cell_seed, "train");
    train_cyclegan(model, corpus_x, corpus_y, tc);

    const Corpus generated = generate(model, mono, vocab);
    AugmentationConfig lm_cfg = cfg.lm;
    lm_cfg.model.seed = derive_seed(cell_seed, "lm");
    lm_cfg.train.seed = lm_cfg.model.seed;
    const AugmentationReport ab =
        augmentation_experiment(cs_target, generated, heldout, lm_cfg);

    results[index] = SweepCell{mc.lambda1, mc.lambda2, ab.augmented.ppl};
  };

  const std::size_t jobs = std::max<std::size_t>(1, cfg.jobs);
  if (jobs == 1 || cells == 1) {
    for (std::size_t i = 0; i < cells; ++i) run_cell(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (std::size_t j = 0; j < std::min(jobs, cells); ++j)
      workers.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < cells; i = next.fetch_add(1)) run_cell(i);
      });
    for (auto& w : workers) w.join();
  }
  return results;
}

inline std::string sweep_table_text(const std::vector<SweepCell>& cells,
                                    const std::vector<double>& grid_l1,
                                    const std::vector<double>& grid_l2) {
  std::ostringstream out;
  out << "l2\\l1   ";
  for (double l1 : grid_l1) {
    std::string cell = fixed(l1, 2);
    cell.insert(0, cell.size() < 10 ? 10 - cell.size() : 0, ' ');
    out << cell;
  }
  out << "\n";
  for (std::size_t row = 0; row < grid_l2.size(); ++row) {
    out << fixed(grid_l2[row], 2) << "    ";
    for (std::size_t col = 0; col < grid_l1.size(); ++col) {
      std::string cell = fixed(cells[row * grid_l1.size() + col].ppl, 4);
      cell.insert(0, cell.size() < 10 ? 10 - cell.size() : 0, ' ');
      out << cell;
    }
    out << "\n";
  }
  return out.str();
}

inline std::string sweep_table_csv(const std::vector<SweepCell>& cells,
                                   const std::vector<double>& grid_l1,
                                   const std::vector<double>& grid_l2) {
  std::ostringstream out;
  out << "lambda2\\lambda1";
  for (double l1 : grid_l1) out << ',' << fixed(l1, 2);
  out << '\n';
  for (std::size_t row = 0; row < grid_l2.size(); ++row) {
    out << fixed(grid_l2[row], 2);
    for (std::size_t col = 0; col < grid_l1.size(); ++col)
      out << ',' << fixed(cells[row * grid_l1.size() + col].ppl, 4);
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// End-to-end desk-scale experiment: toy data -> pseudo-parallel pairs ->
// pretrain -> CycleGAN -> generate -> CMI report -> LM A/B, with every
// artifact written under one output directory.

struct ToyExperimentConfig {
  ToySpec toy;                  // sized to train + heldout sentences
  std::size_t heldout = 100;    // sentences reserved from the toy corpora
  SubstitutionPolicy policy;
  CycleGanConfig model;
  S2STrainConfig pretrain;
  CycleGanTrainConfig train;
  AugmentationConfig lm;
  std::uint64_t seed = 0;
};

struct ToyExperimentResult {
  double pretrain_recon = 0.0;
  double trained_recon = 0.0;
  double dist_mono = 0.0;       // histogram_distance(mono, target CS)
  double dist_generated = 0.0;  // histogram_distance(generated, target CS)
  std::vector<AbArmResult> ab;
};

inline ToyExperimentResult run_toy_experiment(const ToyExperimentConfig& cfg,
                                              const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  auto path = [&](const char* name) { return (fs::path(out_dir) / name).string(); };

  ToySpec spec = cfg.toy;
  spec.seed = derive_seed(cfg.seed, "toy");
  if (spec.corpus_size <= cfg.heldout)
    throw DataError("toy experiment: corpus_size must exceed heldout size");
  ToyData toy = generate_toy(spec);

  // one generation process, split into train and held-out slices so both
  // share the toy languages and lexicon
  const std::size_t train_n = spec.corpus_size - cfg.heldout;
  Corpus mono, cs_target, heldout_cs;
  mono.name = "toy-mono";
  cs_target.name = "toy-cs";
  heldout_cs.name = "toy-cs-heldout";
  for (std::size_t i = 0; i < toy.mono.size(); ++i) {
    if (i < train_n) {
      mono.sentences.push_back(toy.mono.sentences[i]);
      cs_target.sentences.push_back(toy.cs_target.sentences[i]);
    } else {
      heldout_cs.sentences.push_back(toy.cs_target.sentences[i]);
    }
  }
  save_corpus(mono, path("toy_mono.txt"));
  save_corpus(cs_target, path("toy_cs.txt"));
  save_corpus(heldout_cs, path("toy_cs_heldout.txt"));
  save_lexicon(toy.lexicon, path("lexicon.tsv"));

  SubstitutionPolicy policy = cfg.policy;
  policy.seed = derive_seed(cfg.seed, "pairs");
  const auto sentence_pairs = make_pairs(mono, toy.lexicon, policy);
  save_pairs(sentence_pairs, path("pairs.tsv"));

  const Vocabulary vocab = build_vocab({&mono, &cs_target, &heldout_cs}, 1);
  const auto pairs_xy = encode_pairs(sentence_pairs, vocab);
  std::vector<std::pair<IdSeq, IdSeq>> pairs_yx;
  for (const auto& [x, y] : pairs_xy) pairs_yx.emplace_back(y, x);
  std::vector<IdSeq> corpus_x, corpus_y;
  for (const Sentence& s : mono.sentences) corpus_x.push_back(encode(s, vocab, false));
  for (const Sentence& s : cs_target.sentences) corpus_y.push_back(encode(s, vocab, false));

  CycleGanConfig mc = cfg.model;
  mc.vocab = vocab.size();
  mc.seed = derive_seed(cfg.seed, "model");
  S2STrainConfig pc = cfg.pretrain;
  pc.seed = derive_seed(cfg.seed, "pretrain");
  CycleGanModel model = pretrain(pairs_xy, pairs_yx, mc, pc);

  ToyExperimentResult result;
  result.pretrain_recon = reconstruction_accuracy(model, corpus_x);

  CycleGanTrainConfig tc = cfg.train;
  tc.seed = derive_seed(cfg.seed, "train");
  const auto log = train_cyclegan(model, corpus_x, corpus_y, tc);
  write_text_file(path("loss.csv"), loss_csv(log));
  nn::save_checkpoint(path("checkpoint.json"), model.all_params());

  result.trained_recon = reconstruction_accuracy(model, corpus_x);

  const Corpus generated = generate(model, mono, vocab);
  save_corpus(generated, path("generated.txt"));
  write_text_file(path("cmi_report.txt"), cmi_report_text(generated));
  write_text_file(path("cmi_report.json"), cmi_report_json(generated).dump(2) + "\n");

  const CmiHistogram target_hist = histogram(cs_target);
  result.dist_mono = histogram_distance(histogram(mono), target_hist);
  result.dist_generated = histogram_distance(histogram(generated), target_hist);

  AugmentationConfig lm_cfg = cfg.lm;
  lm_cfg.model.seed = derive_seed(cfg.seed, "lm");
  lm_cfg.train.seed = lm_cfg.model.seed;
  result.ab = ab_experiment(cs_target, {{"+cyclegan", generated}}, heldout_cs, heldout_cs,
                            lm_cfg);
  write_text_file(path("ab_report.txt"), ab_report_text(result.ab));
  write_text_file(path("ab_report.csv"), ab_report_csv(result.ab));

  std::ostringstream summary;
  summary << "toy experiment summary\n";
  summary << "vocab: " << vocab.size() << "\n";
  summary << "train sentences: " << mono.size() << "\n";
  summary << "heldout sentences: " << heldout_cs.size() << "\n";
  summary << "pretrain reconstruction accuracy: " << fixed(result.pretrain_recon, 4) << "\n";
  summary << "trained reconstruction accuracy: " << fixed(result.trained_recon, 4) << "\n";
  summary << "histogram distance mono vs cs: " << fixed(result.dist_mono, 6) << "\n";
  summary << "histogram distance generated vs cs: " << fixed(result.dist_generated, 6) << "\n";
  for (const AbArmResult& r : result.ab)
    summary << "ppl " << r.arm << ": dev " << fixed(r.dev_ppl, 4) << " eval "
            << fixed(r.eval_ppl, 4) << "\n";
  write_text_file(path("summary.txt"), summary.str());
  return result;
}

}  // namespace csgen
