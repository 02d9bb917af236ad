#include "polyse/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include "polyse/checkpoint.hpp"
#include "polyse/error.hpp"
#include "polyse/explain.hpp"
#include "polyse/features.hpp"
#include "polyse/model.hpp"
#include "polyse/trainer.hpp"

namespace fs = std::filesystem;

namespace polyse {

namespace {

std::ofstream open_out(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out.flush()) throw Error("failed writing " + path.string());
}

void require(const fs::path& path, const std::string& producer) {
  if (!fs::exists(path)) throw MissingArtifact(path.string(), producer);
}

std::string relative_to(const fs::path& p, const fs::path& root) {
  const fs::path rel = p.lexically_relative(root);
  return rel.empty() ? p.string() : rel.generic_string();
}

// Records what a command read and wrote, next to its outputs. Re-running
// `polyse <command> --config config.conf` in the same output root repeats it.
void write_manifest(const Workspace& ws, const fs::path& dir, const std::string& command,
                    const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs) {
  const RunConfig& cfg = ws.config();
  write_text(dir / "config.conf", to_config_text(cfg));
  std::ostringstream os;
  os << "command " << command << '\n';
  os << "config_hash " << hex64(config_hash(cfg)) << '\n';
  os << "seed " << cfg.seed << '\n';
  os << "deterministic " << (cfg.deterministic ? "true" : "false") << '\n';
  for (const auto& p : inputs) {
    os << "input " << relative_to(p, ws.layout().root) << ' ' << hex64(file_hash(p)) << '\n';
  }
  for (const auto& p : outputs) {
    os << "output " << relative_to(p, ws.layout().root) << ' ' << hex64(file_hash(p)) << '\n';
  }
  write_text(dir / "manifest.txt", os.str());
}

std::vector<fs::path> data_files(const RunConfig& cfg) {
  return {cfg.data.combo, cfg.data.targets, cfg.data.ppi, cfg.data.mono};
}

struct RegimeData {
  RegimeView view;
  KnowledgeGraph train_graph;
};

RegimeData regime_data(Workspace& ws) {
  RegimeView view = apply_regime(ws.ingested().graph, ws.splits(), ws.config().regime);
  KnowledgeGraph tg = training_graph(view.graph, view.splits);
  return RegimeData{std::move(view), std::move(tg)};
}

RelationalFeatureSpace load_space(Workspace& ws, const KnowledgeGraph& g) {
  const fs::path path = ws.layout().features_file(ws.config().regime);
  require(path, "polyse featurize");
  return read_feature_manifest(path, g);
}

void info(const Workspace& ws, const std::string& msg) {
  if (ws.log()) *ws.log() << msg << '\n';
}

std::string safe_name(const std::string& s) {
  std::string out;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '.';
    out += ok ? c : '_';
  }
  return out;
}

}  // namespace

std::uint64_t file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  Fnv1a h;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    h.update(std::string_view(buf, static_cast<std::size_t>(in.gcount())));
  }
  return h.digest();
}

Workspace::Workspace(RunConfig cfg) : cfg_(std::move(cfg)), layout_{cfg_.output_dir} {
  cfg_.sync();
  cfg_.train.validate();
}

const IngestResult& Workspace::ingested() {
  if (!ingest_) {
    for (const auto& p : data_files(cfg_)) {
      if (p.empty()) throw ConfigError("data.* paths must all be set");
    }
    ingest_ = std::make_shared<const IngestResult>(ingest_dataset(cfg_.data, cfg_.schema));
  }
  return *ingest_;
}

const Splits& Workspace::splits() {
  if (!splits_) {
    const fs::path path = layout_.splits_file();
    require(path, "polyse split");
    const KnowledgeGraph& g = ingested().graph;
    SplitManifest m;
    Splits s = read_splits(path, g, &m);
    if (m.dataset_hash != graph_hash(g)) {
      throw Error(path.string() + " was produced from different data; rerun `polyse split`");
    }
    splits_ = std::make_shared<const Splits>(std::move(s));
  }
  return *splits_;
}

void Workspace::adopt(const Workspace& other) {
  ingest_ = other.ingest_;
  splits_ = other.splits_;
}

void cmd_ingest(Workspace& ws) {
  const IngestResult& res = ws.ingested();
  const fs::path dir = ws.layout().ingest_dir();
  const fs::path stats = dir / "stats.txt";
  std::ostringstream os;
  write_stats_report(os, res.stats, decagon_reference_stats());
  os << "self_loops_skipped " << res.self_loops_skipped << '\n';
  os << "duplicate_rows " << res.duplicate_rows << '\n';
  os << "graph_hash " << hex64(graph_hash(res.graph)) << '\n';
  write_text(stats, os.str());
  write_manifest(ws, dir, "ingest", data_files(ws.config()), {stats});
  info(ws, "ingest: wrote " + stats.string());
}

void cmd_split(Workspace& ws) {
  require(ws.layout().ingest_dir() / "stats.txt", "polyse ingest");
  const KnowledgeGraph& g = ws.ingested().graph;
  const RunConfig& cfg = ws.config();
  const Splits s = build_splits(g, cfg.split);
  const fs::path path = ws.layout().splits_file();
  fs::create_directories(path.parent_path());
  write_splits(path, g, s, SplitManifest{graph_hash(g), cfg.split});
  write_manifest(ws, ws.layout().split_dir(), "split", data_files(cfg), {path});
  info(ws, "split: " + std::to_string(s.train.size()) + "/" + std::to_string(s.valid.size()) +
               "/" + std::to_string(s.test.size()) + " examples");
}

void cmd_featurize(Workspace& ws) {
  const RunConfig& cfg = ws.config();
  const RegimeData d = regime_data(ws);
  const auto pairs = support_pairs(d.view.splits.train, cfg.support_pairs);
  const RelationalFeatureSpace space = enumerate_templates(d.train_graph, pairs, cfg.min_support);
  const fs::path path = ws.layout().features_file(cfg.regime);
  fs::create_directories(path.parent_path());
  write_feature_manifest(path, space, d.train_graph);
  write_manifest(ws, path.parent_path(), "featurize", {ws.layout().splits_file()}, {path});
  info(ws, "featurize: " + std::to_string(space.size()) + " templates");
}

void cmd_train(Workspace& ws) {
  const RunConfig& cfg = ws.config();
  const RegimeData d = regime_data(ws);
  const std::string model = cfg.model_name();
  const fs::path dir = ws.layout().model_dir(cfg.regime, model);
  const fs::path ckpt = dir / "checkpoint.bin";
  const fs::path log_path = dir / "train_log.tsv";
  std::vector<fs::path> inputs{ws.layout().splits_file()};

  auto log = open_out(log_path);
  log << "# epoch loss valid_auroc valid_aupr elapsed_s\n";
  try {
    if (cfg.model_type == ModelType::Baseline) {
      const BaselineVocabulary vocab = BaselineVocabulary::from_graph(d.view.graph);
      const BaselineResult r = train_baseline(d.view.graph, d.view.splits, vocab, cfg.train, &log);
      save_baseline(ckpt, r.params, vocab);
    } else {
      RelationalFeatureSpace space;
      if (cfg.train.mode == ScoreMode::Combined) {
        space = load_space(ws, d.train_graph);
        inputs.push_back(ws.layout().features_file(cfg.regime));
      }
      const TrainResult r = train(d.train_graph, d.view.splits, space, cfg.train, &log);
      save_checkpoint(ckpt, r.params, CheckpointInfo{kCheckpointVersion, space.hash(), cfg.train.mode});
    }
  } catch (const TrainingDiverged&) {
    log.flush();
    throw;
  }
  log.flush();
  log.close();
  write_manifest(ws, dir, "train", inputs, {ckpt, log_path});
  info(ws, "train: wrote " + ckpt.string());
}

EvalReport cmd_eval(Workspace& ws, std::optional<fs::path> checkpoint) {
  const RunConfig& cfg = ws.config();
  const RegimeData d = regime_data(ws);
  const std::string model = cfg.model_name();
  const fs::path ckpt = checkpoint.value_or(ws.layout().checkpoint_file(cfg.regime, model));
  require(ckpt, "polyse train");
  std::vector<fs::path> inputs{ws.layout().splits_file(), ckpt};
  const std::string label = std::string(to_string(cfg.regime)) + " " + model + " test";

  EvalReport report;
  if (cfg.model_type == ModelType::Baseline) {
    BaselineVocabulary vocab;
    const BaselineParams bp = load_baseline(ckpt, d.view.graph, &vocab);
    const BaselineFeaturizer featurizer(d.view.graph, vocab);
    report = evaluate(
        [&](const Example& e) {
          return baseline_score(bp, featurizer.featurize(e.drug_a, e.drug_b), e.side_effect);
        },
        d.view.splits.test, cfg.threads, label);
  } else {
    RelationalFeatureSpace space;
    if (cfg.train.mode == ScoreMode::Combined) {
      space = load_space(ws, d.train_graph);
      inputs.push_back(ws.layout().features_file(cfg.regime));
    }
    const ModelParams params = load_checkpoint(ckpt, d.train_graph, space.hash());
    const FeatureCache cache(space, d.train_graph);
    const PoeScorer scorer(params, cfg.train.mode == ScoreMode::Combined ? &cache : nullptr,
                           cfg.train.mode);
    report = evaluate(
        [&](const Example& e) { return scorer.logit(e.drug_a, e.side_effect, e.drug_b); },
        d.view.splits.test, cfg.threads, label);
  }

  const fs::path dir = ws.layout().eval_dir(cfg.regime, model);
  const fs::path report_path = dir / "report.txt";
  const fs::path summary_path = dir / "summary.json";
  {
    auto out = open_out(report_path);
    write_report(out, report, d.view.graph);
  }
  {
    auto out = open_out(summary_path);
    write_summary_json(out, report);
  }
  write_manifest(ws, dir, "eval", inputs, {report_path, summary_path});
  char buf[128];
  std::snprintf(buf, sizeof buf, "eval: %s auroc %.4f aupr %.4f ap50 %.4f", label.c_str(),
                report.aggregate.auroc, report.aggregate.aupr, report.aggregate.ap50);
  info(ws, buf);
  return report;
}

std::string cmd_explain(Workspace& ws, const ExplainRequest& req) {
  const RunConfig& cfg = ws.config();
  const RegimeData d = regime_data(ws);
  const KnowledgeGraph& g = d.view.graph;
  auto drug = [&](const std::string& key) {
    const auto e = g.find_entity(key);
    if (!e || e->kind != EntityKind::Drug) throw UnknownPair("unknown drug '" + key + "'");
    return *e;
  };
  const DrugPair pair = DrugPair::canonical(drug(req.drug_a), drug(req.drug_b));
  const auto se = g.find_relation(req.side_effect);
  if (!se || se->kind != RelationKind::PolypharmacySideEffect) {
    throw UnknownPair("unknown side effect '" + req.side_effect + "'");
  }

  const RelationalFeatureSpace space = load_space(ws, d.train_graph);
  const fs::path ckpt = req.checkpoint.value_or(ws.layout().checkpoint_file(cfg.regime, "combined"));
  require(ckpt, "polyse train");
  std::vector<fs::path> inputs{ws.layout().splits_file(), ws.layout().features_file(cfg.regime), ckpt};
  CheckpointInfo ckpt_info;
  const ModelParams params = load_checkpoint(ckpt, d.train_graph, space.hash(), &ckpt_info);
  if (ckpt_info.mode != ScoreMode::Combined) {
    throw ConfigError("explain needs a combined-mode checkpoint: " + ckpt.string());
  }
  ModelParams emb_params;
  if (req.embedding_checkpoint) {
    require(*req.embedding_checkpoint, "polyse train");
    emb_params = load_checkpoint(*req.embedding_checkpoint, d.train_graph,
                                 RelationalFeatureSpace{}.hash());
    inputs.push_back(*req.embedding_checkpoint);
  }
  const ModelParams& emb = req.embedding_checkpoint ? emb_params : params;

  // Candidates exclude pairs known positive for this side effect in any split.
  const auto candidates = default_candidates(g, params.entities(), *se);
  const FeatureCache cache(space, d.train_graph);
  const PoeScorer combined(params, &cache, ScoreMode::Combined);
  const PoeScorer embedding_only(emb, nullptr, ScoreMode::EmbeddingOnly);
  const RankingResult comb_rank = rank_candidates(combined, *se, candidates);
  const RankingResult emb_rank = rank_candidates(embedding_only, *se, candidates);
  const Attribution attribution = attribute(params, cache, pair, *se);

  std::ostringstream os;
  write_explanation(os, g, space, ExplanationQuery{pair, *se, cfg.explain_top_n}, emb_rank,
                    comb_rank, attribution);
  const fs::path dir = ws.layout().model_dir(cfg.regime, "combined") / "explain";
  const fs::path out = dir / (safe_name(g.entity_key(pair.first)) + "__" +
                              safe_name(g.entity_key(pair.second)) + "__" +
                              safe_name(req.side_effect) + ".txt");
  write_text(out, os.str());
  write_manifest(ws, dir, "explain", inputs, {out});
  return os.str();
}

void cmd_reproduce(Workspace& ws) {
  cmd_ingest(ws);
  cmd_split(ws);

  struct Row {
    Regime regime;
    std::string model;
    EvalReport report;
  };
  std::vector<Row> rows;
  const RunConfig base = ws.config();
  for (Regime regime : {Regime::Full, Regime::DrugDrugOnly, Regime::TargetedDrugsOnly}) {
    std::vector<RunConfig> runs;
    if (regime == Regime::Full) {
      RunConfig c = base;
      c.model_type = ModelType::Baseline;
      runs.push_back(c);
    }
    for (ScoreMode mode : {ScoreMode::EmbeddingOnly, ScoreMode::Combined}) {
      RunConfig c = base;
      c.model_type = ModelType::Poe;
      c.train.mode = mode;
      runs.push_back(c);
    }
    bool featurized = false;
    for (RunConfig& c : runs) {
      c.regime = regime;
      // Same files as running each command alone with this config.
      Workspace sub(c);
      sub.set_log(ws.log());
      sub.adopt(ws);
      if (c.model_type == ModelType::Poe && c.train.mode == ScoreMode::Combined && !featurized) {
        cmd_featurize(sub);
        featurized = true;
      }
      cmd_train(sub);
      rows.push_back(Row{regime, c.model_name(), cmd_eval(sub)});
    }
  }

  std::ostringstream os;
  os << "# regime model auroc aupr ap50 side_effects pooled_auroc pooled_aupr pooled_ap50\n";
  char buf[256];
  for (const Row& r : rows) {
    const Metrics& a = r.report.aggregate;
    const Metrics p = r.report.pooled.value_or(Metrics{});
    std::snprintf(buf, sizeof buf, "%s %s %.6f %.6f %.6f %zu %.6f %.6f %.6f\n",
                  to_string(r.regime), r.model.c_str(), a.auroc, a.aupr, a.ap50,
                  r.report.n_aggregated, p.auroc, p.aupr, p.ap50);
    os << buf;
  }
  write_text(ws.layout().results_file(), os.str());
  std::vector<fs::path> inputs;
  for (const Row& r : rows) inputs.push_back(ws.layout().eval_dir(r.regime, r.model) / "report.txt");
  write_manifest(ws, ws.layout().root, "reproduce", inputs, {ws.layout().results_file()});
  info(ws, "reproduce: wrote " + ws.layout().results_file().string());
}

}  // namespace polyse
