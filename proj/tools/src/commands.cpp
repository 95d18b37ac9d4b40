#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include "html_report.hpp"
#include "manifest.hpp"
#include "ratex/checkpoint.hpp"
#include "ratex/data.hpp"
#include "ratex/synth.hpp"

namespace ratex::cli {

namespace fs = std::filesystem;

namespace {

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const SynthSpecError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const TrainingDiverged& e) {
    err << "training aborted: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitFailure;
  }
}

Dataset load_dataset(const fs::path& path, Split split, const char* role) {
  if (path.empty()) throw UsageError(std::string("no ") + role + " dataset path given");
  if (!fs::is_regular_file(path)) throw UsageError(std::string(role) + " dataset not found: " + path.string());
  return load_jsonl(path, split);
}

void require_fits(const Dataset& ds, const ModelConfig& cfg) {
  if (!is_compositional(cfg.variant)) return;
  for (const auto& d : ds.documents) {
    for (const auto& s : d.sentences) {
      if (s.size() > cfg.encoder.max_sentence_len) {
        throw UsageError("document '" + d.doc_id + "' has a sentence of " + std::to_string(s.size()) +
                         " tokens, above max_sentence_len " + std::to_string(cfg.encoder.max_sentence_len) +
                         "; re-segment the dataset");
      }
    }
  }
}

void write_text(const fs::path& path, const std::string& text) { write_file_atomic(path, text); }

std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

double sample_std(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

/// Field-wise mean and sample standard deviation over repeat reports.
std::pair<EvalReport, EvalReport> aggregate(const std::vector<EvalReport>& reports) {
  EvalReport mean, sd;
  auto field = [&](auto member) {
    std::vector<double> xs;
    for (const auto& r : reports)
      if (r.*member) xs.push_back(*(r.*member));
    if (xs.size() != reports.size()) return;
    mean.*member = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    sd.*member = sample_std(xs);
  };
  field(&EvalReport::doc_f1);
  field(&EvalReport::token_p);
  field(&EvalReport::token_r);
  field(&EvalReport::token_f1);
  field(&EvalReport::token_f05);
  field(&EvalReport::map);
  std::vector<double> cov;
  for (const auto& r : reports) cov.push_back(r.coverage);
  mean.coverage = std::accumulate(cov.begin(), cov.end(), 0.0) / static_cast<double>(cov.size());
  sd.coverage = sample_std(cov);
  return {mean, sd};
}

std::string percent(std::optional<double> v) {
  if (!v) return "-";
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << 100.0 * *v;
  return s.str();
}

}  // namespace

Baseline parse_baseline(const std::string& name) {
  if (name == "none" || name.empty()) return Baseline::none;
  if (name == "random") return Baseline::random;
  if (name == "topk-attn") return Baseline::topk_attn;
  throw UsageError("unknown baseline '" + name + "' (expected random or topk-attn)");
}

int cmd_synth(const SynthOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    std::ifstream in(opts.spec_path);
    if (!in) throw UsageError("cannot open synthetic spec " + opts.spec_path.string());
    SynthSpec spec;
    try {
      spec = nlohmann::json::parse(in).get<SynthSpec>();
    } catch (const nlohmann::json::exception& e) {
      throw UsageError("synthetic spec " + opts.spec_path.string() + ": " + e.what());
    }
    if (opts.seed) spec.seed = *opts.seed;
    spec.validate();
    if (opts.out_dir.empty()) throw UsageError("no output directory given (--out)");

    const Dataset all = synth_generate(spec);
    const auto parts =
        split_dataset(all, {spec.train_fraction, spec.dev_fraction, spec.test_fraction}, spec.seed);

    fs::create_directories(opts.out_dir);
    RunManifest manifest("synth", nlohmann::ordered_json(nlohmann::json(spec)), spec.seed);
    manifest.input("spec", opts.spec_path);
    for (const auto& [name, part] : {std::pair<const char*, const Dataset*>{"train", &parts.train},
                                     {"dev", &parts.dev},
                                     {"test", &parts.test}}) {
      const fs::path path = opts.out_dir / (std::string(name) + ".jsonl");
      std::ostringstream buf;
      write_jsonl(*part, buf);
      write_text(path, buf.str());
      manifest.output(name, path);
      out << name << ": " << part->size() << " documents, " << part->token_count() << " tokens, evidence "
          << std::fixed << std::setprecision(2) << 100.0 * part->evidence_fraction() << "% -> " << path.string()
          << '\n';
    }
    manifest.write(opts.out_dir / "manifest.json");
    return kExitOk;
  });
}

int cmd_train(const TrainOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig cfg = load_run_config(opts.config_path);
    apply(cfg, opts.overrides);
    cfg.validate();
    const Dataset train = load_dataset(cfg.train_path, Split::train, "train");
    const Dataset dev = load_dataset(cfg.dev_path, Split::dev, "dev");
    require_fits(train, cfg.model);
    require_fits(dev, cfg.model);
    const Vocab vocab = build_vocab(train, cfg.vocab_size);
    const std::string hash = config_hash(cfg);

    fs::create_directories(cfg.out_dir);
    RunManifest manifest("train", to_json(cfg), cfg.train.seed);
    manifest.input("config", opts.config_path);
    manifest.input("train", cfg.train_path);
    manifest.input("dev", cfg.dev_path);

    out << "training " << to_string(cfg.model.variant) << " on " << train.size() << " documents, " << cfg.train.repeats
        << " repeat(s) x " << cfg.train.epochs << " epochs\n";
    std::vector<EvalReport> reports;
    std::vector<double> seconds;
    auto repeats = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < cfg.train.repeats; ++r) {
      const std::uint64_t seed = cfg.train.seed + r;
      ModelParams params;
      const RunResult run = train_run(cfg.model, params, train, dev, vocab, cfg.train, seed,
                                      [&](std::size_t epoch, const EpochStats& s, const EvalReport& dev_report) {
                                        out << "  repeat " << r + 1 << " epoch " << epoch << ": loss "
                                            << std::setprecision(6) << s.mean_loss << ", dev doc F1 "
                                            << percent(dev_report.doc_f1) << ", " << std::fixed
                                            << std::setprecision(2) << s.seconds << " s" << std::defaultfloat
                                            << '\n';
                                      });
      const Checkpoint& best = run.history[run.best];
      nlohmann::ordered_json extra;
      extra["config_hash"] = hash;
      extra["seed"] = seed;
      extra["variant"] = to_string(cfg.model.variant);
      extra["config"] = to_json(cfg);
      extra["vocab"] = std::vector<std::string>(vocab.regular_tokens().begin(), vocab.regular_tokens().end());
      const fs::path stem = cfg.out_dir / ("repeat-" + std::to_string(r + 1));
      save_checkpoint(stem, best, nlohmann::json(extra));
      manifest.output("checkpoint-" + std::to_string(r + 1), fs::path(stem).concat(".ckpt"));
      reports.push_back(best.dev_report);
      seconds.push_back(run.mean_seconds_per_epoch);
      repeats.push_back({{"seed", seed}, {"best_epoch", best.epoch}, {"dev_report", nlohmann::json(best.dev_report)}});
    }

    const auto [mean, sd] = aggregate(reports);
    nlohmann::ordered_json report;
    report["variant"] = to_string(cfg.model.variant);
    report["config_hash"] = hash;
    report["repeats"] = repeats;
    report["mean"] = nlohmann::json(mean);
    report["std"] = nlohmann::json(sd);
    const fs::path report_path = cfg.out_dir / "report.json";
    write_text(report_path, dump(report));
    manifest.output("report", report_path);

    std::vector<std::pair<std::string, EvalReport>> rows;
    for (std::size_t r = 0; r < reports.size(); ++r) {
      EvalReport row = reports[r];
      row.seconds_per_epoch = seconds[r];
      rows.emplace_back("repeat " + std::to_string(r + 1), row);
    }
    EvalReport mean_row = mean;
    mean_row.seconds_per_epoch = std::accumulate(seconds.begin(), seconds.end(), 0.0) / static_cast<double>(seconds.size());
    rows.emplace_back("mean", mean_row);
    std::ostringstream table;
    table << format_report_table(rows);
    table << "token F1 " << percent(mean.token_f1) << " ± " << percent(sd.token_f1) << ", doc F1 "
          << percent(mean.doc_f1) << " ± " << percent(sd.doc_f1) << '\n';
    write_text(cfg.out_dir / "report.txt", table.str());
    out << table.str();
    manifest.write(cfg.out_dir / "manifest.json");
    return kExitOk;
  });
}

int cmd_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opts.k && !(*opts.k > 0.0 && *opts.k <= 100.0)) throw UsageError("--k must lie in (0, 100]");
    const Dataset data = load_dataset(opts.data_path, Split::test, "evaluation");
    if (opts.token_metrics && !data.has_token_labels()) {
      throw UsageError("token metrics requested but " + opts.data_path.string() + " lacks token_labels");
    }
    if (opts.baseline != Baseline::random && opts.checkpoint.empty()) throw UsageError("no checkpoint given");

    std::optional<LoadedCheckpoint> loaded;
    RunConfig cfg;
    if (!opts.checkpoint.empty()) {
      loaded = load_checkpoint(checkpoint_stem(opts.checkpoint));
      if (!loaded->sidecar.contains("config") || !loaded->sidecar.contains("vocab")) {
        throw UsageError("checkpoint sidecar lacks config or vocab");
      }
      cfg = run_config_from_json(loaded->sidecar.at("config"));
    }
    if (opts.baseline == Baseline::topk_attn && is_compositional(cfg.model.variant)) {
      throw UsageError("the topk-attn baseline needs a windowed-encoder checkpoint, got " +
                       to_string(cfg.model.variant));
    }
    const double k = opts.k.value_or(cfg.model.head.k);

    std::vector<Prediction> predictions;
    EvalReport report;
    std::string label;
    if (opts.baseline == Baseline::random) {
      std::vector<std::size_t> lengths;
      for (const auto& d : data.documents) lengths.push_back(d.token_count());
      const auto scores = random_baseline_scores(lengths, opts.seed);
      for (std::size_t i = 0; i < data.size(); ++i) {
        predictions.push_back({data.documents[i].doc_id, 0.0, scores[i], {}, topk_threshold(scores[i], k)});
      }
      report = evaluate_token_scores(data, scores, k);
      label = "random";
    } else {
      const auto tokens = loaded->sidecar.at("vocab").get<std::vector<std::string>>();
      const Vocab vocab(tokens);
      ModelParams params = ModelParams::zeros(cfg.model, vocab.size());
      restore(params, loaded->checkpoint.tensors);
      require_fits(data, cfg.model);
      const auto encoded = encode_dataset(data, vocab);
      if (opts.baseline == Baseline::topk_attn) {
        NoGradGuard no_grad;
        std::vector<std::vector<double>> scores;
        const auto reduction = opts.head_max ? HeadReduction::max : HeadReduction::mean;
        for (std::size_t i = 0; i < data.size(); ++i) {
          const Forward fwd = monolithic_forward(encoded[i], cfg.model, params);
          scores.push_back(cls_global_attention_scores(fwd.attention.back(), reduction));
          predictions.push_back({data.documents[i].doc_id, fwd.y_hat.item(), scores.back(), {},
                                 topk_threshold(scores.back(), k)});
        }
        report = evaluate_token_scores(data, scores, k);
        label = "topk-attn";
      } else {
        predictions = predict_dataset(cfg.model, params, data, encoded);
        report = evaluate_predictions(data, predictions, loss_variant(cfg.model.variant), cfg.model.head.k);
        label = to_string(cfg.model.variant);
      }
    }
    if (!opts.token_metrics) report.token_p = report.token_r = report.token_f1 = report.token_f05 = report.map = {};

    fs::create_directories(opts.out_dir);
    RunManifest manifest("eval",
                         {{"baseline", opts.baseline == Baseline::none ? "none" : label},
                          {"k", k},
                          {"seed", opts.seed},
                          {"head_reduction", opts.head_max ? "max" : "mean"}},
                         opts.seed);
    if (!opts.checkpoint.empty()) manifest.input("checkpoint", opts.checkpoint);
    manifest.input("data", opts.data_path);
    const fs::path pred_path = opts.out_dir / "predictions.jsonl";
    write_predictions(pred_path, predictions);
    manifest.output("predictions", pred_path);
    const fs::path report_path = opts.out_dir / "report.json";
    write_text(report_path, dump(nlohmann::ordered_json(nlohmann::json(report))));
    manifest.output("report", report_path);
    std::vector<std::pair<std::string, EvalReport>> rows{{label, report}};
    const std::string table = format_report_table(rows);
    write_text(opts.out_dir / "report.txt", table);
    manifest.write(opts.out_dir / "manifest.json");
    out << table;
    return kExitOk;
  });
}

int cmd_report(const ReportOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Dataset data = load_dataset(opts.data_path, Split::test, "report");
    if (!fs::is_regular_file(opts.predictions_path)) {
      throw UsageError("predictions file not found: " + opts.predictions_path.string());
    }
    if (opts.out_html.empty()) throw UsageError("no output path given (--out)");
    const auto predictions = read_predictions(opts.predictions_path);
    std::map<std::string, const Prediction*> by_id;
    for (const auto& p : predictions) by_id[p.doc_id] = &p;
    std::vector<std::string> missing;
    std::vector<Prediction> ordered;
    for (const auto& d : data.documents) {
      auto it = by_id.find(d.doc_id);
      if (it == by_id.end()) {
        missing.push_back(d.doc_id);
        continue;
      }
      if (it->second->token_scores.size() != d.token_count()) {
        throw UsageError("prediction for '" + d.doc_id + "' has " + std::to_string(it->second->token_scores.size()) +
                         " scores for " + std::to_string(d.token_count()) + " tokens");
      }
      ordered.push_back(*it->second);
    }
    if (!missing.empty()) {
      std::string list;
      for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
      throw UsageError("predictions lack " + std::to_string(missing.size()) + " document(s): " + list);
    }
    const std::string html = render_html_report(data, ordered, "Rationales: " + opts.data_path.filename().string());
    if (opts.out_html.has_parent_path()) fs::create_directories(opts.out_html.parent_path());
    write_text(opts.out_html, html);
    RunManifest manifest("report", nlohmann::ordered_json::object(), 0);
    manifest.input("predictions", opts.predictions_path);
    manifest.input("data", opts.data_path);
    manifest.output("html", opts.out_html);
    manifest.write(fs::path(opts.out_html).concat(".manifest.json"));
    out << "wrote " << opts.out_html.string() << " (" << ordered.size() << " documents)\n";
    return kExitOk;
  });
}

int cmd_bench(const BenchOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig cfg = load_run_config(opts.config_path);
    apply(cfg, opts.overrides);
    cfg.validate();
    if (cfg.bench_variants.size() < 2) throw UsageError("bench needs at least two entries in bench_variants");
    Dataset train = load_dataset(cfg.train_path, Split::train, "train");
    if (cfg.bench_max_docs && train.size() > cfg.bench_max_docs) train.documents.resize(cfg.bench_max_docs);
    for (auto v : cfg.bench_variants) {
      ModelConfig m = cfg.model;
      m.variant = v;
      require_fits(train, m);
    }
    const Vocab vocab = build_vocab(train, cfg.vocab_size);
    const auto encoded = encode_dataset(train, vocab);

    fs::create_directories(cfg.out_dir);
    RunManifest manifest("bench", to_json(cfg), cfg.train.seed);
    manifest.input("config", opts.config_path);
    manifest.input("train", cfg.train_path);

    TrainConfig tcfg = cfg.train;
    tcfg.epochs = cfg.bench_epochs;
    std::vector<std::pair<std::string, double>> timings;
    for (auto v : cfg.bench_variants) {
      ModelConfig m = cfg.model;
      m.variant = v;
      m.head.loss = loss_variant(v);
      ModelParams params = init_params(m, vocab.size(), tcfg.seed);
      Optimizer optimizer(tcfg.optimizer, tcfg.learning_rate, params.list());
      double total = 0.0;
      for (std::size_t epoch = 1; epoch <= tcfg.epochs; ++epoch) {
        total += train_epoch(m, params, optimizer, train, encoded, tcfg, epoch).seconds;
      }
      timings.emplace_back(to_string(v), total / static_cast<double>(tcfg.epochs));
    }
    const double ratio = timings[0].second / timings[1].second;

    std::ostringstream table;
    table << std::left << std::setw(26) << "variant" << std::right << std::setw(14) << "s/epoch" << '\n';
    for (const auto& [name, s] : timings) {
      table << std::left << std::setw(26) << name << std::right << std::setw(14) << std::fixed << std::setprecision(3)
            << s << '\n';
    }
    table << "ratio " << timings[0].first << " / " << timings[1].first << ": " << std::fixed << std::setprecision(3)
          << ratio << '\n';
    out << table.str();

    nlohmann::ordered_json j;
    j["documents"] = train.size();
    j["epochs"] = tcfg.epochs;
    auto rows = nlohmann::ordered_json::array();
    for (const auto& [name, s] : timings) rows.push_back({{"variant", name}, {"seconds_per_epoch", s}});
    j["variants"] = rows;
    j["ratio"] = ratio;
    const fs::path bench_path = cfg.out_dir / "bench.json";
    write_text(bench_path, dump(j));
    manifest.output("bench", bench_path);
    manifest.write(cfg.out_dir / "manifest.json");
    return kExitOk;
  });
}

}  // namespace ratex::cli
