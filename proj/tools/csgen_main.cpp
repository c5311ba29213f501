#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "csgen/pipeline.hpp"

using namespace csgen;
namespace fs = std::filesystem;

namespace {

// Options shared by every command. Flag values win over config-file values;
// config-file values win over defaults.
struct Common {
  std::string config_path;
  std::string out = "out";
  std::uint64_t seed = 0;
  std::vector<std::function<void(const nlohmann::json&)>> overrides;
  CLI::App* cmd = nullptr;

  void attach(CLI::App* sub) {
    cmd = sub;
    sub->add_option("--config", config_path, "JSON config file; flags override its values");
    opt("--seed", seed, "root random seed");
    opt("--out", out, "output directory");
  }

  template <typename T>
  CLI::Option* opt(const std::string& flag, T& value, const std::string& desc) {
    CLI::Option* o = cmd->add_option(flag, value, desc);
    std::string key = flag.substr(2);
    for (char& c : key)
      if (c == '-') c = '_';
    overrides.push_back([o, &value, key](const nlohmann::json& cfg) {
      if (o->count() == 0 && cfg.contains(key)) value = cfg.at(key).get<T>();
    });
    return o;
  }

  // Applies the config file, then prepares the output directory.
  std::string begin() {
    if (!config_path.empty()) {
      const nlohmann::json cfg = load_json_config(config_path);
      for (const auto& apply : overrides) apply(cfg);
    }
    fs::create_directories(out);
    return out;
  }

  std::string path(const char* name) const { return (fs::path(out) / name).string(); }

  void manifest(const std::string& command, nlohmann::ordered_json config) const {
    config["seed"] = seed;
    config["out"] = out;
    write_manifest(path("manifest.json"), command, config, seed);
  }
};

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw DataError(std::string(what) + " path not set");
  if (!fs::exists(path)) throw DataError(std::string(what) + " not found: " + path);
}

std::vector<IdSeq> encode_corpus(const Corpus& c, const Vocabulary& v) {
  std::vector<IdSeq> out;
  out.reserve(c.size());
  for (const Sentence& s : c.sentences) out.push_back(encode(s, v, false));
  return out;
}

std::string epoch_csv(const std::vector<double>& losses) {
  std::ostringstream out;
  out << "epoch,mean_nll\n";
  for (std::size_t e = 0; e < losses.size(); ++e) out << e << ',' << fixed(losses[e], 6) << '\n';
  return out.str();
}

nlohmann::ordered_json cyclegan_config_json(const CycleGanConfig& c) {
  nlohmann::ordered_json j;
  j["vocab"] = c.vocab;
  j["embed"] = c.embed;
  j["hidden"] = c.hidden;
  j["disc_embed"] = c.disc_embed;
  j["disc_hidden"] = c.disc_hidden;
  j["lambda1"] = c.lambda1;
  j["lambda2"] = c.lambda2;
  j["init_scale"] = c.init_scale;
  j["soft_slack"] = c.soft_slack;
  j["max_decode_len"] = c.max_decode_len;
  j["seed"] = c.seed;
  return j;
}

CycleGanConfig cyclegan_config_from_json(const nlohmann::json& j) {
  CycleGanConfig c;
  c.vocab = j.at("vocab").get<std::size_t>();
  c.embed = j.at("embed").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::size_t>();
  c.disc_embed = j.at("disc_embed").get<std::size_t>();
  c.disc_hidden = j.at("disc_hidden").get<std::size_t>();
  c.lambda1 = j.at("lambda1").get<double>();
  c.lambda2 = j.at("lambda2").get<double>();
  c.init_scale = j.at("init_scale").get<double>();
  c.soft_slack = j.at("soft_slack").get<std::size_t>();
  c.max_decode_len = j.at("max_decode_len").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

void add_tokenize(CLI::App& app) {
  auto c = std::make_shared<Common>();
  auto input = std::make_shared<std::string>();
  CLI::App* cmd = app.add_subcommand("tokenize", "tokenize a raw text file into a corpus");
  c->attach(cmd);
  c->opt("--input", *input, "input text file, one sentence per line");
  cmd->callback([c, input] {
    c->begin();
    require_file(*input, "input corpus");
    const Corpus corpus = load_corpus(*input, fs::path(*input).stem().string());
    save_corpus(corpus, c->path("tokenized.txt"));
    c->manifest("tokenize", {{"input", *input}});
    std::cout << "tokenized " << corpus.size() << " sentences\n";
  });
}

void add_cmi_report(CLI::App& app) {
  auto c = std::make_shared<Common>();
  auto input = std::make_shared<std::string>();
  CLI::App* cmd = app.add_subcommand("cmi-report", "CMI histogram of a corpus");
  c->attach(cmd);
  c->opt("--input", *input, "corpus file");
  cmd->callback([c, input] {
    c->begin();
    require_file(*input, "input corpus");
    const Corpus corpus = load_corpus(*input, fs::path(*input).stem().string());
    const std::string text = cmi_report_text(corpus);
    write_text_file(c->path("cmi_report.txt"), text);
    write_text_file(c->path("cmi_report.json"), cmi_report_json(corpus).dump(2) + "\n");
    c->manifest("cmi-report", {{"input", *input}});
    std::cout << text;
  });
}

void add_synth_pairs(CLI::App& app) {
  auto c = std::make_shared<Common>();
  struct Opts {
    std::string input, lexicon;
    SubstitutionPolicy policy;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand("synth-pairs", "build pseudo-parallel pairs by substitution");
  c->attach(cmd);
  c->opt("--input", o->input, "monolingual corpus file");
  c->opt("--lexicon", o->lexicon, "translation lexicon file");
  c->opt("--rate", o->policy.rate, "per-token substitution probability");
  c->opt("--max-phrase-len", o->policy.max_phrase_len, "maximum translated phrase length");
  cmd->callback([c, o] {
    c->begin();
    require_file(o->input, "input corpus");
    require_file(o->lexicon, "lexicon");
    const Corpus corpus = load_corpus(o->input);
    const TranslationLexicon lexicon = load_lexicon(o->lexicon);
    o->policy.seed = derive_seed(c->seed, "synth-pairs");
    const auto pairs = make_pairs(corpus, lexicon, o->policy);
    save_pairs(pairs, c->path("pairs.tsv"));
    c->manifest("synth-pairs", {{"input", o->input},
                                {"lexicon", o->lexicon},
                                {"rate", o->policy.rate},
                                {"max_phrase_len", o->policy.max_phrase_len}});
    std::cout << "wrote " << pairs.size() << " pairs\n";
  });
}

void add_train_s2s(CLI::App& app) {
  auto c = std::make_shared<Common>();
  struct Opts {
    std::string pairs;
    Seq2SeqConfig model;
    S2STrainConfig train;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand("train-s2s", "train a seq2seq model on a pair file");
  c->attach(cmd);
  c->opt("--pairs", o->pairs, "pair file from synth-pairs");
  c->opt("--embed", o->model.embed, "embedding dimension");
  c->opt("--hidden", o->model.hidden, "hidden dimension");
  c->opt("--epochs", o->train.epochs, "training epochs");
  c->opt("--batch", o->train.batch, "batch size");
  c->opt("--lr", o->train.lr, "learning rate");
  c->opt("--clip", o->train.clip, "gradient norm clip");
  cmd->callback([c, o] {
    c->begin();
    require_file(o->pairs, "pair file");
    const auto sentence_pairs = load_pairs(o->pairs);
    if (sentence_pairs.empty()) throw DataError("pair file is empty: " + o->pairs);
    Corpus src, dst;
    for (const auto& [s, d] : sentence_pairs) {
      src.sentences.push_back(s);
      dst.sentences.push_back(d);
    }
    const Vocabulary vocab = build_vocab({&src, &dst}, 1);
    const auto pairs = encode_pairs(sentence_pairs, vocab);
    o->model.vocab = vocab.size();
    o->model.seed = derive_seed(c->seed, "model");
    o->train.seed = derive_seed(c->seed, "train");
    Seq2SeqModel model(o->model);
    const S2STrainReport report = train_s2s(model, pairs, o->train);
    save_vocab(vocab, c->path("vocab.txt"));
    nn::save_checkpoint(c->path("s2s_checkpoint.json"), model.params());
    write_text_file(c->path("train_log.csv"), epoch_csv(report.epoch_mean_nll));
    nlohmann::ordered_json mj;
    mj["vocab"] = o->model.vocab;
    mj["embed"] = o->model.embed;
    mj["hidden"] = o->model.hidden;
    mj["seed"] = o->model.seed;
    write_text_file(c->path("s2s_model.json"), mj.dump(2) + "\n");
    c->manifest("train-s2s", {{"pairs", o->pairs},
                              {"embed", o->model.embed},
                              {"hidden", o->model.hidden},
                              {"epochs", o->train.epochs},
                              {"batch", o->train.batch},
                              {"lr", o->train.lr},
                              {"clip", o->train.clip}});
    std::cout << "final mean NLL " << fixed(report.epoch_mean_nll.back(), 6) << "\n";
  });
}

void add_train_cyclegan(CLI::App& app) {
  auto c = std::make_shared<Common>();
  struct Opts {
    std::string mono, cs, lexicon;
    CycleGanConfig model;
    SubstitutionPolicy policy;
    S2STrainConfig pre;
    CycleGanTrainConfig train;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand("train-cyclegan", "pretrain and adversarially train G/F/D");
  c->attach(cmd);
  c->opt("--mono", o->mono, "monolingual X corpus file");
  c->opt("--cs", o->cs, "code-switched Y corpus file");
  c->opt("--lexicon", o->lexicon, "translation lexicon for pseudo-parallel pretraining");
  c->opt("--embed", o->model.embed, "generator embedding dimension");
  c->opt("--hidden", o->model.hidden, "generator hidden dimension");
  c->opt("--disc-embed", o->model.disc_embed, "discriminator embedding dimension");
  c->opt("--disc-hidden", o->model.disc_hidden, "discriminator hidden dimension");
  c->opt("--lambda1", o->model.lambda1, "X-cycle loss weight");
  c->opt("--lambda2", o->model.lambda2, "Y-cycle loss weight");
  c->opt("--rate", o->policy.rate, "substitution rate for pretraining pairs");
  c->opt("--pretrain-epochs", o->pre.epochs, "pretraining epochs");
  c->opt("--pretrain-batch", o->pre.batch, "pretraining batch size");
  c->opt("--pretrain-lr", o->pre.lr, "pretraining learning rate");
  c->opt("--steps", o->train.steps, "adversarial training steps");
  c->opt("--d-steps", o->train.d_steps_per_g, "discriminator steps per generator step");
  c->opt("--batch", o->train.batch, "adversarial batch size");
  c->opt("--lr-g", o->train.lr_g, "generator learning rate");
  c->opt("--lr-d", o->train.lr_d, "discriminator learning rate");
  cmd->callback([c, o] {
    c->begin();
    require_file(o->mono, "mono corpus");
    require_file(o->cs, "cs corpus");
    require_file(o->lexicon, "lexicon");
    const Corpus mono = load_corpus(o->mono, "mono");
    const Corpus cs = load_corpus(o->cs, "cs");
    const TranslationLexicon lexicon = load_lexicon(o->lexicon);
    const Vocabulary vocab = build_vocab({&mono, &cs}, 1);

    o->policy.seed = derive_seed(c->seed, "pairs");
    const auto sentence_pairs = make_pairs(mono, lexicon, o->policy);
    save_pairs(sentence_pairs, c->path("pairs.tsv"));
    const auto pairs_xy = encode_pairs(sentence_pairs, vocab);
    std::vector<std::pair<IdSeq, IdSeq>> pairs_yx;
    for (const auto& [x, y] : pairs_xy) pairs_yx.emplace_back(y, x);

    o->model.vocab = vocab.size();
    o->model.seed = derive_seed(c->seed, "model");
    o->pre.seed = derive_seed(c->seed, "pretrain");
    CycleGanModel model = pretrain(pairs_xy, pairs_yx, o->model, o->pre);

    o->train.seed = derive_seed(c->seed, "train");
    const auto log =
        train_cyclegan(model, encode_corpus(mono, vocab), encode_corpus(cs, vocab), o->train);

    save_vocab(vocab, c->path("vocab.txt"));
    nn::save_checkpoint(c->path("checkpoint.json"), model.all_params());
    write_text_file(c->path("loss.csv"), loss_csv(log));
    write_text_file(c->path("model.json"), cyclegan_config_json(o->model).dump(2) + "\n");
    c->manifest("train-cyclegan",
                {{"mono", o->mono},
                 {"cs", o->cs},
                 {"lexicon", o->lexicon},
                 {"model", cyclegan_config_json(o->model)},
                 {"rate", o->policy.rate},
                 {"pretrain_epochs", o->pre.epochs},
                 {"steps", o->train.steps},
                 {"batch", o->train.batch}});
    std::cout << "final total loss " << fixed(log.back().total, 6) << "\n";
  });
}

void add_generate(CLI::App& app) {
  auto c = std::make_shared<Common>();
  struct Opts {
    std::string model, checkpoint, vocab, input;
    std::string mode = "greedy";
    double temperature = 1.0;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand("generate", "apply a trained G to a monolingual corpus");
  c->attach(cmd);
  c->opt("--model", o->model, "model.json from train-cyclegan");
  c->opt("--checkpoint", o->checkpoint, "checkpoint.json from train-cyclegan");
  c->opt("--vocab", o->vocab, "vocab.txt from train-cyclegan");
  c->opt("--input", o->input, "monolingual corpus file");
  c->opt("--mode", o->mode, "decode mode: greedy | sample");
  c->opt("--temperature", o->temperature, "sampling temperature");
  cmd->callback([c, o] {
    c->begin();
    require_file(o->model, "model config");
    require_file(o->checkpoint, "checkpoint");
    require_file(o->vocab, "vocabulary");
    require_file(o->input, "input corpus");
    if (o->mode != "greedy" && o->mode != "sample")
      throw DataError("unknown decode mode: " + o->mode);
    const Vocabulary vocab = load_vocab(o->vocab);
    CycleGanModel model(cyclegan_config_from_json(load_json_config(o->model)));
    nn::load_checkpoint(o->checkpoint, model.all_params());
    const Corpus input = load_corpus(o->input, fs::path(o->input).stem().string());
    const DecodeMode mode = o->mode == "greedy" ? DecodeMode::Greedy : DecodeMode::Sample;
    const Corpus generated =
        generate(model, input, vocab, mode, o->temperature, derive_seed(c->seed, "generate"));
    save_corpus(generated, c->path("generated.txt"));
    c->manifest("generate", {{"model", o->model},
                             {"checkpoint", o->checkpoint},
                             {"vocab", o->vocab},
                             {"input", o->input},
                             {"mode", o->mode},
                             {"temperature", o->temperature}});
    std::cout << "generated " << generated.size() << " sentences\n";
  });
}

struct LmOpts {
  LmConfig model;
  LmTrainConfig train;
  std::string unit = "word";
  CLI::Option* layers_opt = nullptr;
  CLI::Option* batch_opt = nullptr;

  void attach(Common& c) {
    c.opt("--embed", model.embed, "embedding dimension");
    c.opt("--hidden", model.hidden, "hidden dimension");
    layers_opt = c.opt("--layers", model.layers, "LSTM layers");
    c.opt("--epochs", train.epochs, "training epochs");
    batch_opt = c.opt("--batch", train.batch, "batch size");
    c.opt("--lr", train.lr, "learning rate");
    c.opt("--unit", unit, "LM unit preset: word (1 layer, batch 20) | character (2 layers, batch 256)");
  }

  void resolve() {
    if (unit != "word" && unit != "character")
      throw DataError("unknown LM unit: " + unit);
    if (unit == "character") {
      if (layers_opt->count() == 0) model.layers = 2;
      if (batch_opt->count() == 0) train.batch = 256;
    }
  }
};

void add_train_lm(CLI::App& app) {
  auto c = std::make_shared<Common>();
  struct Opts {
    std::string input;
    LmOpts lm;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand("train-lm", "train a recurrent language model");
  c->attach(cmd);
  c->opt("--input", o->input, "training corpus file");
  o->lm.attach(*c);
  cmd->callback([c, o] {
    c->begin();
    require_file(o->input, "input corpus");
    o->lm.resolve();
    const Corpus corpus = load_corpus(o->input);
    if (corpus.empty()) throw DataError("training corpus is empty: " + o->input);
    const Vocabulary vocab = build_vocab(corpus, 1);
    o->lm.model.vocab = vocab.size();
    o->lm.model.seed = derive_seed(c->seed, "model");
    o->lm.train.seed = derive_seed(c->seed, "train");
    LanguageModel model(o->lm.model);
    const LmTrainReport report = train_lm(model, encode_corpus(corpus, vocab), o->lm.train);
    save_vocab(vocab, c->path("vocab.txt"));
    nn::save_checkpoint(c->path("lm_checkpoint.json"), model.params());
    write_text_file(c->path("train_log.csv"), epoch_csv(report.epoch_mean_nll));
    nlohmann::ordered_json mj;
    mj["vocab"] = o->lm.model.vocab;
    mj["embed"] = o->lm.model.embed;
    mj["hidden"] = o->lm.model.hidden;
    mj["layers"] = o->lm.model.layers;
    mj["seed"] = o->lm.model.seed;
    write_text_file(c->path("lm_model.json"), mj.dump(2) + "\n");
    c->manifest("train-lm", {{"input", o->input},
                             {"unit", o->lm.unit},
                             {"embed", o->lm.model.embed},
                             {"hidden", o->lm.model.hidden},
                             {"layers", o->lm.model.layers},
                             {"epochs", o->lm.train.epochs},
                             {"batch", o->lm.train.batch},
                             {"lr", o->lm.train.lr}});
    std::cout << "final mean NLL " << fixed(report.epoch_mean_nll.back(), 6) << "\n";
  });
}

void add_eval_ppl(CLI::App& app) {
  auto c = std::make_shared<Common>();
  struct Opts {
    std::string model, checkpoint, vocab, input;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand("eval-ppl", "perplexity of a trained LM on a corpus");
  c->attach(cmd);
  c->opt("--model", o->model, "lm_model.json from train-lm");
  c->opt("--checkpoint", o->checkpoint, "lm_checkpoint.json from train-lm");
  c->opt("--vocab", o->vocab, "vocab.txt from train-lm");
  c->opt("--input", o->input, "evaluation corpus file");
  cmd->callback([c, o] {
    c->begin();
    require_file(o->model, "model config");
    require_file(o->checkpoint, "checkpoint");
    require_file(o->vocab, "vocabulary");
    require_file(o->input, "input corpus");
    const nlohmann::json mj = load_json_config(o->model);
    LmConfig cfg;
    cfg.vocab = mj.at("vocab").get<std::size_t>();
    cfg.embed = mj.at("embed").get<std::size_t>();
    cfg.hidden = mj.at("hidden").get<std::size_t>();
    cfg.layers = mj.at("layers").get<std::size_t>();
    LanguageModel model(cfg);
    nn::load_checkpoint(o->checkpoint, model.params());
    const Vocabulary vocab = load_vocab(o->vocab);
    const Corpus corpus = load_corpus(o->input, fs::path(o->input).stem().string());
    const PerplexityReport report = perplexity(model, corpus, vocab);
    nlohmann::ordered_json rj;
    rj["corpus"] = report.corpus_name;
    rj["tokens"] = report.token_count;
    rj["mean_nll"] = report.mean_nll;
    rj["ppl"] = report.ppl;
    write_text_file(c->path("ppl.json"), rj.dump(2) + "\n");
    c->manifest("eval-ppl", {{"model", o->model},
                             {"checkpoint", o->checkpoint},
                             {"vocab", o->vocab},
                             {"input", o->input}});
    std::cout << "ppl " << fixed(report.ppl, 4) << " over " << report.token_count
              << " tokens\n";
  });
}

void add_ab_experiment(CLI::App& app) {
  auto c = std::make_shared<Common>();
  struct Opts {
    std::string base, dev, eval_path;
    std::vector<std::string> generated;
    LmOpts lm;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand("ab-experiment", "baseline vs augmented LM comparison");
  c->attach(cmd);
  c->opt("--base", o->base, "base training corpus file");
  c->opt("--dev", o->dev, "dev held-out corpus file");
  c->opt("--eval", o->eval_path, "eval held-out corpus file");
  c->opt("--generated", o->generated, "generated corpus file(s), one arm each");
  o->lm.attach(*c);
  cmd->callback([c, o] {
    c->begin();
    require_file(o->base, "base corpus");
    require_file(o->dev, "dev corpus");
    require_file(o->eval_path, "eval corpus");
    o->lm.resolve();
    std::vector<std::pair<std::string, Corpus>> arms;
    for (const std::string& g : o->generated) {
      require_file(g, "generated corpus");
      arms.emplace_back("+" + fs::path(g).stem().string(), load_corpus(g));
    }
    AugmentationConfig cfg;
    cfg.model = o->lm.model;
    cfg.train = o->lm.train;
    cfg.model.seed = derive_seed(c->seed, "lm");
    cfg.train.seed = cfg.model.seed;
    const auto results = ab_experiment(load_corpus(o->base), arms, load_corpus(o->dev),
                                       load_corpus(o->eval_path), cfg);
    const std::string text = ab_report_text(results);
    write_text_file(c->path("ab_report.txt"), text);
    write_text_file(c->path("ab_report.csv"), ab_report_csv(results));
    c->manifest("ab-experiment", {{"base", o->base},
                                  {"dev", o->dev},
                                  {"eval", o->eval_path},
                                  {"generated", o->generated},
                                  {"epochs", o->lm.train.epochs},
                                  {"batch", o->lm.train.batch}});
    std::cout << text;
  });
}

void add_sweep_lambda(CLI::App& app) {
  auto c = std::make_shared<Common>();
  struct Opts {
    std::string mono, cs, heldout, lexicon;
    SweepConfig sweep;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand("sweep-lambda", "grid sweep over cycle-loss weights");
  c->attach(cmd);
  c->opt("--mono", o->mono, "monolingual X corpus file");
  c->opt("--cs", o->cs, "code-switched Y corpus file");
  c->opt("--heldout", o->heldout, "held-out CS corpus for downstream PPL");
  c->opt("--lexicon", o->lexicon, "translation lexicon file");
  c->opt("--l1", o->sweep.grid_l1, "lambda1 grid values");
  c->opt("--l2", o->sweep.grid_l2, "lambda2 grid values");
  c->opt("--jobs", o->sweep.jobs, "parallel sweep cells");
  c->opt("--embed", o->sweep.model.embed, "generator embedding dimension");
  c->opt("--hidden", o->sweep.model.hidden, "generator hidden dimension");
  c->opt("--rate", o->sweep.policy.rate, "substitution rate for pretraining pairs");
  c->opt("--pretrain-epochs", o->sweep.pretrain.epochs, "pretraining epochs per cell");
  c->opt("--steps", o->sweep.train.steps, "adversarial steps per cell");
  c->opt("--batch", o->sweep.train.batch, "adversarial batch size");
  c->opt("--lm-epochs", o->sweep.lm.train.epochs, "LM epochs per cell");
  c->opt("--lm-batch", o->sweep.lm.train.batch, "LM batch size");
  cmd->callback([c, o] {
    c->begin();
    require_file(o->mono, "mono corpus");
    require_file(o->cs, "cs corpus");
    require_file(o->heldout, "heldout corpus");
    require_file(o->lexicon, "lexicon");
    o->sweep.seed = c->seed;
    const auto cells = lambda_sweep(load_corpus(o->mono, "mono"), load_corpus(o->cs, "cs"),
                                    load_corpus(o->heldout, "heldout"),
                                    load_lexicon(o->lexicon), o->sweep);
    const std::string text = sweep_table_text(cells, o->sweep.grid_l1, o->sweep.grid_l2);
    write_text_file(c->path("sweep.txt"), text);
    write_text_file(c->path("sweep.csv"),
                    sweep_table_csv(cells, o->sweep.grid_l1, o->sweep.grid_l2));
    c->manifest("sweep-lambda", {{"mono", o->mono},
                                 {"cs", o->cs},
                                 {"heldout", o->heldout},
                                 {"lexicon", o->lexicon},
                                 {"l1", o->sweep.grid_l1},
                                 {"l2", o->sweep.grid_l2},
                                 {"jobs", o->sweep.jobs},
                                 {"steps", o->sweep.train.steps}});
    std::cout << text;
  });
}

void add_toy_experiment(CLI::App& app) {
  auto c = std::make_shared<Common>();
  auto o = std::make_shared<ToyExperimentConfig>();
  CLI::App* cmd = app.add_subcommand("toy-experiment", "full pipeline on generated toy data");
  c->attach(cmd);
  c->opt("--corpus-size", o->toy.corpus_size, "toy sentences (train + heldout)");
  c->opt("--heldout", o->heldout, "held-out sentence count");
  c->opt("--vocab-a", o->toy.vocab_a_size, "toy language A vocabulary size");
  c->opt("--vocab-b", o->toy.vocab_b_size, "toy language B vocabulary size");
  c->opt("--cs-rate", o->toy.cs_rate, "toy code-switching rate");
  c->opt("--rate", o->policy.rate, "substitution rate for pretraining pairs");
  c->opt("--embed", o->model.embed, "generator embedding dimension");
  c->opt("--hidden", o->model.hidden, "generator hidden dimension");
  c->opt("--lambda1", o->model.lambda1, "X-cycle loss weight");
  c->opt("--lambda2", o->model.lambda2, "Y-cycle loss weight");
  c->opt("--pretrain-epochs", o->pretrain.epochs, "pretraining epochs");
  c->opt("--steps", o->train.steps, "adversarial training steps");
  c->opt("--batch", o->train.batch, "adversarial batch size");
  c->opt("--lm-epochs", o->lm.train.epochs, "LM epochs");
  c->opt("--lm-batch", o->lm.train.batch, "LM batch size");
  cmd->callback([c, o] {
    c->begin();
    o->seed = c->seed;
    const ToyExperimentResult result = run_toy_experiment(*o, c->out);
    c->manifest("toy-experiment", {{"corpus_size", o->toy.corpus_size},
                                   {"heldout", o->heldout},
                                   {"vocab_a", o->toy.vocab_a_size},
                                   {"vocab_b", o->toy.vocab_b_size},
                                   {"cs_rate", o->toy.cs_rate},
                                   {"rate", o->policy.rate},
                                   {"embed", o->model.embed},
                                   {"hidden", o->model.hidden},
                                   {"lambda1", o->model.lambda1},
                                   {"lambda2", o->model.lambda2},
                                   {"pretrain_epochs", o->pretrain.epochs},
                                   {"steps", o->train.steps},
                                   {"lm_epochs", o->lm.train.epochs}});
    std::cout << read_text_file(c->path("summary.txt"));
    (void)result;
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"code-switching text generation toolkit"};
  app.require_subcommand(1);
  add_tokenize(app);
  add_cmi_report(app);
  add_synth_pairs(app);
  add_train_s2s(app);
  add_train_cyclegan(app);
  add_generate(app);
  add_train_lm(app);
  add_eval_ppl(app);
  add_ab_experiment(app);
  add_sweep_lambda(app);
  add_toy_experiment(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const csgen::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const csgen::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const csgen::ShapeError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
