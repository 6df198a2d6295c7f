// nucleus: treebank-to-report toolkit driver.
//
// Subcommands cover each pipeline stage (transform, extract, train-parser,
// parse, eval, extract-vectors, cbow, train-probe, report) plus `pipeline`,
// which chains them with on-disk, resumable artifacts.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "nucleus/cbow.hpp"
#include "nucleus/conllu.hpp"
#include "nucleus/numeric.hpp"
#include "nucleus/parser.hpp"
#include "nucleus/probe.hpp"
#include "nucleus/stats.hpp"
#include "nucleus/treebank_ops.hpp"

namespace fs = std::filesystem;
using namespace nucleus;

static constexpr const char* kVersion = "0.1.0";

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw numeric::UsageError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw numeric::UsageError("cannot write " + path);
  out << text;
}

void require_file(const std::string& path, const std::string& produced_by) {
  if (!fs::exists(path))
    throw numeric::UsageError("missing input file: " + path +
                              (produced_by.empty()
                                   ? ""
                                   : " (produce it with `" + produced_by +
                                         "` first)"));
}

// Config echo written next to every command's outputs.
void write_config_echo(const std::string& path,
                       const std::vector<std::pair<std::string, std::string>>&
                           kv) {
  std::ostringstream out;
  out << "version=" << kVersion << "\n";
  for (const auto& [k, v] : kv) out << k << "=" << v << "\n";
  write_text(path, out.str());
}

std::size_t probe_workers() {
  if (const char* env = std::getenv("NUCLEUS_PROBE_WORKERS")) {
    const long n = std::atol(env);
    if (n >= 1) return static_cast<std::size_t>(n);
  }
  return 1;
}

treebank::CollectOptions collect_options(const std::string& lemma_filter) {
  treebank::CollectOptions opt;
  if (!lemma_filter.empty()) {
    std::set<std::string> lemmas;
    std::istringstream in(read_text(lemma_filter));
    std::string w;
    while (in >> w) lemmas.insert(w);
    opt.aux_lemma_filter = std::move(lemmas);
  }
  return opt;
}

std::string training_log_tsv(const parser::TrainResult& res) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch\ttrain_loss\tdev_las\n";
  for (const auto& e : res.log)
    out << e.epoch << "\t" << e.train_loss << "\t" << e.dev_las << "\n";
  out << "# best_epoch=" << res.best_epoch << " best_dev_las=" << res.best_dev_las
      << "\n";
  return out.str();
}

parser::ParserModel train_parser_files(const std::string& train_path,
                                       const std::string& dev_path,
                                       const parser::ParserConfig& cfg,
                                       const std::string& out_model,
                                       const std::string& out_log) {
  const auto train = conllu::load_conllu_file(train_path);
  const auto dev = conllu::load_conllu_file(dev_path);
  numeric::seed_rng(cfg.seed);
  parser::ParserModel model(cfg, parser::Vocab::build(train));
  const parser::TrainResult res = parser::train_parser(model, train, dev);
  parser::save_model(model, out_model);
  if (!out_log.empty()) write_text(out_log, training_log_tsv(res));
  std::cout << "best dev LAS " << res.best_dev_las << " at epoch "
            << res.best_epoch << "\n";
  return model;
}

// One probe-report line per cell; the file doubles as `report` input.
struct ReportCell {
  stats::CellKey key;
  stats::Cell cell;
};

std::string report_cells_tsv(const std::vector<ReportCell>& cells) {
  std::ostringstream out;
  out << std::fixed;
  out.precision(6);
  out << "task\tlayer\ttarget\tsetting\tmajority\taccuracy\tdelta\n";
  for (const auto& c : cells)
    out << c.key.task << "\t" << c.key.layer << "\t" << c.key.target_kind
        << "\t" << c.key.setting << "\t" << c.cell.majority << "\t"
        << c.cell.accuracy << "\t" << c.cell.delta() << "\n";
  return out.str();
}

std::vector<ReportCell> parse_report_cells(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<ReportCell> cells;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (first) {  // header
      first = false;
      continue;
    }
    std::istringstream ls(line);
    ReportCell c;
    std::string maj, acc, delta;
    if (!std::getline(ls, c.key.task, '\t') ||
        !std::getline(ls, c.key.layer, '\t') ||
        !std::getline(ls, c.key.target_kind, '\t') ||
        !std::getline(ls, c.key.setting, '\t') ||
        !std::getline(ls, maj, '\t') || !std::getline(ls, acc, '\t'))
      throw numeric::UsageError("malformed probe report line: " + line);
    c.cell.majority = std::stod(maj);
    c.cell.accuracy = std::stod(acc);
    cells.push_back(std::move(c));
  }
  return cells;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string part;
  while (std::getline(in, part, ','))
    if (!part.empty()) out.push_back(part);
  return out;
}

std::vector<std::vector<std::string>> corpus_forms(
    const conllu::Treebank& tb) {
  std::vector<std::vector<std::string>> corpus;
  for (const auto& s : tb) {
    std::vector<std::string> forms;
    for (const auto& t : s.tokens) forms.push_back(t.form);
    corpus.push_back(std::move(forms));
  }
  return corpus;
}

void labels_of(const std::vector<treebank::ProbeInstance>& insts,
               std::vector<std::string>& out) {
  out.clear();
  for (const auto& i : insts) out.push_back(i.label);
}

// ---- pipeline ----

struct PipelineOptions {
  std::string train, dev, out_dir;
  std::string repr = "ud";
  std::string lang = "xx";
  bool recursive = true;  // also train the composition model
  std::uint64_t seed = 1;
  std::size_t epochs = 30;
  std::string lemma_filter;
};

struct PipelineCell {
  treebank::Task task;
  treebank::TargetKind target;
  probe::Layer layer;
  std::string setting;  // bas / rc / w2v / type / char share parser settings
};

int run_pipeline(const PipelineOptions& po) {
  fs::create_directories(po.out_dir);
  const auto path = [&](const std::string& name) {
    return (fs::path(po.out_dir) / name).string();
  };
  write_config_echo(path("config.txt"),
                    {{"command", "pipeline"},
                     {"train", po.train},
                     {"dev", po.dev},
                     {"repr", po.repr},
                     {"lang", po.lang},
                     {"recursive", po.recursive ? "true" : "false"},
                     {"seed", std::to_string(po.seed)},
                     {"epochs", std::to_string(po.epochs)},
                     {"lemma_filter", po.lemma_filter}});

  const auto repr = treebank::representation_from_string(po.repr);
  const auto opt = collect_options(po.lemma_filter);

  // stage 1: representation transform
  std::string train_path = po.train, dev_path = po.dev;
  if (repr == treebank::Representation::MS) {
    train_path = path("train.ms.conllu");
    dev_path = path("dev.ms.conllu");
    treebank::TransformOptions topt;
    topt.collect = opt;
    if (!fs::exists(train_path))
      conllu::save_conllu_file(
          treebank::transform_ud_to_ms(conllu::load_conllu_file(po.train),
                                       topt),
          train_path);
    if (!fs::exists(dev_path))
      conllu::save_conllu_file(
          treebank::transform_ud_to_ms(conllu::load_conllu_file(po.dev), topt),
          dev_path);
  }
  const auto train_tb = conllu::load_conllu_file(train_path);
  const auto dev_tb = conllu::load_conllu_file(dev_path);

  // stage 2: probe target datasets
  std::vector<treebank::TargetKind> targets = {treebank::TargetKind::FMV};
  if (repr == treebank::Representation::UD) {
    targets.push_back(treebank::TargetKind::NFMV);
    targets.push_back(treebank::TargetKind::PUNCT);
  } else {
    targets.push_back(treebank::TargetKind::MAUX);
  }
  std::map<std::pair<treebank::Task, treebank::TargetKind>,
           treebank::TaskDataset>
      datasets;
  for (auto task :
       {treebank::Task::transitivity, treebank::Task::agreement}) {
    for (auto target : targets) {
      if (target == treebank::TargetKind::PUNCT &&
          task != treebank::Task::agreement)
        continue;  // punctuation is an agreement control only
      auto ds =
          treebank::build_task_dataset(train_tb, dev_tb, task, target, repr,
                                       opt);
      const std::string stem = "ds_" + treebank::to_string(task) + "_" +
                               treebank::to_string(target);
      write_text(path(stem + ".train.tsv"),
                 treebank::dataset_split_tsv(ds.train, task));
      write_text(path(stem + ".dev.tsv"),
                 treebank::dataset_split_tsv(ds.dev, task));
      datasets.emplace(std::make_pair(task, target), std::move(ds));
    }
  }

  // stage 3: parsers (baseline, and recursive for composed vectors)
  parser::ParserConfig pcfg;
  pcfg.seed = po.seed;
  pcfg.epochs = po.epochs;
  std::optional<parser::ParserModel> bas, rc;
  if (fs::exists(path("parser_bas.model")))
    bas.emplace(parser::load_model(path("parser_bas.model")));
  else
    bas.emplace(train_parser_files(train_path, dev_path, pcfg,
                                   path("parser_bas.model"),
                                   path("parser_bas.log.tsv")));
  if (po.recursive) {
    parser::ParserConfig rcfg = pcfg;
    rcfg.recursive = true;
    if (fs::exists(path("parser_rc.model")))
      rc.emplace(parser::load_model(path("parser_rc.model")));
    else
      rc.emplace(train_parser_files(train_path, dev_path, rcfg,
                                    path("parser_rc.model"),
                                    path("parser_rc.log.tsv")));
  }

  // stage 4: type-level embeddings for the language-model comparison
  if (!fs::exists(path("w2v.vec"))) {
    cbow::CbowConfig ccfg;
    ccfg.seed = po.seed;
    cbow::save_embeddings(cbow::train_cbow(corpus_forms(train_tb), ccfg).table,
                          path("w2v.vec"));
  }
  const auto w2v = cbow::load_embeddings(path("w2v.vec"));

  // stage 5: vector extraction per cell
  std::vector<PipelineCell> cells;
  for (const auto& [key, ds] : datasets) {
    const auto [task, target] = key;
    if (target == treebank::TargetKind::PUNCT) {
      cells.push_back({task, target, probe::Layer::token, "bas"});
      continue;
    }
    for (auto layer : {probe::Layer::type, probe::Layer::chr,
                       probe::Layer::token})
      cells.push_back({task, target, layer, "bas"});
    cells.push_back({task, target, probe::Layer::w2v, "w2v"});
    if (po.recursive && target != treebank::TargetKind::FMV)
      cells.push_back({task, target, probe::Layer::composed, "rc"});
  }

  const auto vec_path = [&](const PipelineCell& c, const char* split) {
    return path("vec_" + probe::to_string(c.layer) + "_" +
                treebank::to_string(c.target) + "_" +
                treebank::to_string(c.task) + "." + split + ".vec");
  };
  for (const auto& [key, ds] : datasets) {
    const auto [task, target] = key;
    // group the parser-side layers needed per model
    std::vector<probe::Layer> bas_layers, rc_layers;
    bool want_w2v = false;
    for (const auto& c : cells) {
      if (c.task != task || c.target != target) continue;
      if (fs::exists(vec_path(c, "train")) && fs::exists(vec_path(c, "dev")))
        continue;
      if (c.layer == probe::Layer::w2v)
        want_w2v = true;
      else if (c.layer == probe::Layer::composed)
        rc_layers.push_back(c.layer);
      else
        bas_layers.push_back(c.layer);
    }
    const auto save_sets = [&](const std::map<probe::Layer, probe::VectorSet>&
                                   sets,
                               const char* split) {
      for (const auto& [layer, vs] : sets) {
        PipelineCell c{task, target, layer, ""};
        probe::save_vector_set(vs, vec_path(c, split));
      }
    };
    if (!bas_layers.empty()) {
      save_sets(probe::extract_vectors(*bas, train_tb, ds.train, task, target,
                                       bas_layers),
                "train");
      save_sets(probe::extract_vectors(*bas, dev_tb, ds.dev, task, target,
                                       bas_layers),
                "dev");
    }
    if (!rc_layers.empty()) {
      save_sets(probe::extract_vectors(*rc, train_tb, ds.train, task, target,
                                       rc_layers),
                "train");
      save_sets(probe::extract_vectors(*rc, dev_tb, ds.dev, task, target,
                                       rc_layers),
                "dev");
    }
    if (want_w2v) {
      PipelineCell c{task, target, probe::Layer::w2v, ""};
      probe::save_vector_set(
          probe::extract_w2v_vectors(w2v, train_tb, ds.train, task, target),
          vec_path(c, "train"));
      probe::save_vector_set(
          probe::extract_w2v_vectors(w2v, dev_tb, ds.dev, task, target),
          vec_path(c, "dev"));
    }
  }

  // stage 6: probes, parallel over cells, capped by NUCLEUS_PROBE_WORKERS
  std::vector<ReportCell> report(cells.size());
  std::atomic<std::size_t> next{0};
  const std::size_t workers = std::min(probe_workers(), cells.size());
  const auto worker = [&]() {
    for (std::size_t i = next.fetch_add(1); i < cells.size();
         i = next.fetch_add(1)) {
      const PipelineCell& c = cells[i];
      const auto train_vs = probe::load_vector_set(vec_path(c, "train"));
      const auto dev_vs = probe::load_vector_set(vec_path(c, "dev"));
      probe::ProbeConfig pc;
      pc.seed = po.seed * 1000 + i;  // independent stream per cell
      const auto pm = probe::train_probe(train_vs, pc);
      std::vector<std::string> tl, dl;
      labels_of(train_vs.instances, tl);
      labels_of(dev_vs.instances, dl);
      ReportCell rcell;
      rcell.key = {treebank::to_string(c.task), probe::to_string(c.layer),
                   treebank::to_string(c.target), c.setting};
      rcell.cell.majority = probe::majority_baseline(tl, dl).value_or(0.0);
      rcell.cell.accuracy = probe::eval_probe(pm, dev_vs);
      report[i] = std::move(rcell);
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  write_text(path("probe_report.tsv"), report_cells_tsv(report));

  // stage 7: rendered tables
  std::vector<std::pair<stats::CellKey, stats::Cell>> lang_cells;
  for (const auto& c : report) lang_cells.emplace_back(c.key, c.cell);
  const auto matrix = stats::build_results({{po.lang, lang_cells}});
  write_text(path("report.tsv"), stats::render(matrix, stats::RenderFormat::tsv));
  write_text(path("report.md"), stats::render(matrix, stats::RenderFormat::md));
  std::cout << "pipeline outputs in " << po.out_dir << "\n";
  return matrix.has_missing() ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"treebank-to-report probing toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.set_config("--config", "", "line-oriented key=value config; flags override");
  app.get_config_ptr()->configurable(true);

  int exit_code = 0;

  // transform
  std::string t_in, t_out, t_reattach = "next-right", t_lemmas;
  auto* t = app.add_subcommand("transform",
                               "rewrite UD aux attachments to MS chains");
  t->add_option("--in", t_in, "input CoNLL-U")->required()->configurable(true);
  t->add_option("--out", t_out, "output CoNLL-U")->required();
  t->add_option("--reattach", t_reattach,
                "pre-verbal dependent policy: next-right | all-to-maux");
  t->add_option("--aux-lemmas", t_lemmas, "lemma allow-list file");
  t->callback([&]() {
    const auto tb = conllu::load_conllu_file(t_in);
    if (treebank::looks_like_ms(tb))
      throw numeric::UsageError("input is already MS: aux relations already "
                                "run auxiliary-to-verb");
    treebank::TransformOptions opt;
    opt.collect = collect_options(t_lemmas);
    if (t_reattach == "all-to-maux")
      opt.reattach = treebank::MsReattachPolicy::all_to_maux;
    else if (t_reattach != "next-right")
      throw numeric::UsageError("unknown reattach policy: " + t_reattach);
    conllu::save_conllu_file(treebank::transform_ud_to_ms(tb, opt), t_out);
    write_config_echo(t_out + ".config",
                      {{"command", "transform"},
                       {"in", t_in},
                       {"reattach", t_reattach},
                       {"aux_lemmas", t_lemmas}});
  });

  // extract
  std::string e_train, e_dev, e_task, e_target, e_repr = "ud", e_out, e_lemmas;
  auto* e = app.add_subcommand("extract", "build probe target datasets");
  e->add_option("--train", e_train)->required()->configurable(true);
  e->add_option("--dev", e_dev)->required();
  e->add_option("--task", e_task, "transitivity | agreement")->required();
  e->add_option("--target", e_target, "FMV | NFMV | MAUX | PUNCT")->required();
  e->add_option("--repr", e_repr, "ud | ms");
  e->add_option("--out", e_out, "output stem (writes .train.tsv/.dev.tsv)")
      ->required();
  e->add_option("--aux-lemmas", e_lemmas, "lemma allow-list file");
  e->callback([&]() {
    const auto ds = treebank::build_task_dataset(
        conllu::load_conllu_file(e_train), conllu::load_conllu_file(e_dev),
        treebank::task_from_string(e_task),
        treebank::target_kind_from_string(e_target),
        treebank::representation_from_string(e_repr),
        collect_options(e_lemmas));
    write_text(e_out + ".train.tsv",
               treebank::dataset_split_tsv(ds.train, ds.task));
    write_text(e_out + ".dev.tsv", treebank::dataset_split_tsv(ds.dev, ds.task));
    write_config_echo(e_out + ".config",
                      {{"command", "extract"},
                       {"train", e_train},
                       {"dev", e_dev},
                       {"task", e_task},
                       {"target", e_target},
                       {"repr", e_repr},
                       {"aux_lemmas", e_lemmas}});
    std::cout << "train instances\t" << ds.train.size() << "\n"
              << "dev instances\t" << ds.dev.size() << "\n";
  });

  // train-parser
  std::string p_train, p_dev, p_out, p_log;
  bool p_recursive = false;
  std::uint64_t p_seed = 1;
  std::size_t p_epochs = 30;
  auto* tp = app.add_subcommand("train-parser", "train the greedy parser");
  tp->add_option("--train", p_train)->required()->configurable(true);
  tp->add_option("--dev", p_dev)->required();
  tp->add_option("--out", p_out, "model file")->required();
  tp->add_option("--log", p_log, "training log TSV");
  tp->add_flag("--recursive", p_recursive, "subtree composition over AVCs");
  tp->add_option("--seed", p_seed);
  tp->add_option("--epochs", p_epochs);
  tp->callback([&]() {
    require_file(p_train, "");
    require_file(p_dev, "");
    parser::ParserConfig cfg;
    cfg.recursive = p_recursive;
    cfg.seed = p_seed;
    cfg.epochs = p_epochs;
    train_parser_files(p_train, p_dev, cfg, p_out,
                       p_log.empty() ? p_out + ".log.tsv" : p_log);
    write_config_echo(p_out + ".config",
                      {{"command", "train-parser"},
                       {"train", p_train},
                       {"dev", p_dev},
                       {"recursive", p_recursive ? "true" : "false"},
                       {"seed", std::to_string(p_seed)},
                       {"epochs", std::to_string(p_epochs)}});
  });

  // parse
  std::string pa_model, pa_in, pa_out;
  auto* pa = app.add_subcommand("parse", "parse a treebank with a saved model");
  pa->add_option("--model", pa_model)->required()->configurable(true);
  pa->add_option("--in", pa_in)->required();
  pa->add_option("--out", pa_out)->required();
  pa->callback([&]() {
    require_file(pa_model, "train-parser");
    const auto m = parser::load_model(pa_model);
    conllu::save_conllu_file(
        parser::parse_treebank(m, conllu::load_conllu_file(pa_in)), pa_out);
  });

  // eval
  std::string ev_gold, ev_pred;
  bool ev_no_punct = false;
  auto* ev = app.add_subcommand("eval", "score predictions (LAS/UAS)");
  ev->add_option("--gold", ev_gold)->required()->configurable(true);
  ev->add_option("--pred", ev_pred)->required();
  ev->add_flag("--exclude-punct", ev_no_punct, "ignore punct-labeled tokens");
  ev->callback([&]() {
    const auto rep = parser::evaluate_las(conllu::load_conllu_file(ev_gold),
                                          conllu::load_conllu_file(ev_pred),
                                          !ev_no_punct);
    std::cout << std::fixed << std::setprecision(1);
    std::cout << "LAS\t" << rep.las << "\nUAS\t" << rep.uas << "\ntokens\t"
              << rep.tokens << "\n";
  });

  // extract-vectors
  std::string xv_model, xv_emb, xv_treebank, xv_dataset, xv_layers, xv_task,
      xv_target, xv_out;
  auto* xv = app.add_subcommand("extract-vectors",
                                "freeze a model and dump per-layer vectors");
  xv->add_option("--model", xv_model, "parser model file")->configurable(true);
  xv->add_option("--embeddings", xv_emb, "w2v embedding file");
  xv->add_option("--treebank", xv_treebank)->required();
  xv->add_option("--dataset", xv_dataset, "probe dataset TSV")->required();
  xv->add_option("--layers", xv_layers,
                 "comma list of type,char,token,composed,w2v")
      ->required();
  xv->add_option("--task", xv_task)->required();
  xv->add_option("--target", xv_target)->required();
  xv->add_option("--out", xv_out, "output stem (writes <stem>.<layer>.vec)")
      ->required();
  xv->callback([&]() {
    require_file(xv_dataset, "extract");
    const auto tb = conllu::load_conllu_file(xv_treebank);
    const auto insts =
        treebank::parse_dataset_split_tsv(read_text(xv_dataset));
    const auto task = treebank::task_from_string(xv_task);
    const auto target = treebank::target_kind_from_string(xv_target);
    std::vector<probe::Layer> parser_layers;
    bool want_w2v = false;
    for (const auto& name : split_csv(xv_layers)) {
      const auto l = probe::layer_from_string(name);
      if (l == probe::Layer::w2v)
        want_w2v = true;
      else
        parser_layers.push_back(l);
    }
    if (!parser_layers.empty()) {
      require_file(xv_model, "train-parser");
      const auto m = parser::load_model(xv_model);
      for (const auto& [layer, vs] :
           probe::extract_vectors(m, tb, insts, task, target, parser_layers))
        probe::save_vector_set(vs,
                               xv_out + "." + probe::to_string(layer) + ".vec");
    }
    if (want_w2v) {
      require_file(xv_emb, "cbow");
      probe::save_vector_set(
          probe::extract_w2v_vectors(cbow::load_embeddings(xv_emb), tb, insts,
                                     task, target),
          xv_out + ".w2v.vec");
    }
  });

  // cbow
  std::string cb_in, cb_out;
  cbow::CbowConfig cb_cfg;
  auto* cb = app.add_subcommand("cbow", "train type embeddings on a treebank");
  cb->add_option("--in", cb_in, "CoNLL-U corpus")->required()->configurable(true);
  cb->add_option("--out", cb_out)->required();
  cb->add_option("--dim", cb_cfg.dim);
  cb->add_option("--window", cb_cfg.window);
  cb->add_option("--min-count", cb_cfg.min_count);
  cb->add_option("--negatives", cb_cfg.negatives);
  cb->add_option("--epochs", cb_cfg.epochs);
  cb->add_option("--seed", cb_cfg.seed);
  cb->callback([&]() {
    const auto res =
        cbow::train_cbow(corpus_forms(conllu::load_conllu_file(cb_in)), cb_cfg);
    cbow::save_embeddings(res.table, cb_out);
    write_config_echo(cb_out + ".config",
                      {{"command", "cbow"},
                       {"in", cb_in},
                       {"dim", std::to_string(cb_cfg.dim)},
                       {"seed", std::to_string(cb_cfg.seed)}});
    std::cout << "vocab\t" << res.table.vocab.size() << "\n";
  });

  // train-probe
  std::string prb_train, prb_dev, prb_kind = "mlp1", prb_out;
  std::uint64_t prb_seed = 1;
  std::size_t prb_epochs = 20;
  auto* prb = app.add_subcommand("train-probe",
                                 "train and score a diagnostic classifier");
  prb->add_option("--train-vectors", prb_train)->required()->configurable(true);
  prb->add_option("--dev-vectors", prb_dev)->required();
  prb->add_option("--kind", prb_kind, "mlp1 | linear");
  prb->add_option("--seed", prb_seed);
  prb->add_option("--epochs", prb_epochs);
  prb->add_option("--out", prb_out, "append a probe-report TSV line");
  prb->callback([&]() {
    require_file(prb_train, "extract-vectors");
    require_file(prb_dev, "extract-vectors");
    const auto train_vs = probe::load_vector_set(prb_train);
    const auto dev_vs = probe::load_vector_set(prb_dev);
    probe::ProbeConfig cfg;
    if (prb_kind == "linear")
      cfg.kind = probe::ProbeKind::linear;
    else if (prb_kind != "mlp1")
      throw numeric::UsageError("unknown probe kind: " + prb_kind);
    cfg.seed = prb_seed;
    cfg.epochs = prb_epochs;
    const auto pm = probe::train_probe(train_vs, cfg);
    std::vector<std::string> tl, dl;
    labels_of(train_vs.instances, tl);
    labels_of(dev_vs.instances, dl);
    const double maj = probe::majority_baseline(tl, dl).value_or(0.0);
    const double acc = probe::eval_probe(pm, dev_vs);
    std::cout.precision(17);
    std::cout << "majority\t" << maj << "\naccuracy\t" << acc << "\ndelta\t"
              << acc - maj << "\n";
    if (!prb_out.empty()) {
      ReportCell c;
      c.key = {treebank::to_string(train_vs.task),
               probe::to_string(train_vs.layer),
               treebank::to_string(train_vs.target_kind), prb_kind};
      c.cell = {maj, acc};
      const bool fresh = !fs::exists(prb_out);
      std::ofstream out(prb_out, std::ios::binary | std::ios::app);
      const std::string tsv = report_cells_tsv({c});
      out << (fresh ? tsv : tsv.substr(tsv.find('\n') + 1));
    }
  });

  // report
  std::vector<std::string> rp_inputs;
  std::string rp_out, rp_fmt = "tsv";
  auto* rp = app.add_subcommand("report", "render the cross-language table");
  rp->add_option("--in", rp_inputs, "lang=probe_report.tsv (repeatable)")
      ->required()
      ->configurable(true);
  rp->add_option("--out", rp_out, "output file (default stdout)");
  rp->add_option("--fmt", rp_fmt, "tsv | md");
  rp->callback([&]() {
    std::vector<std::pair<std::string,
                          std::vector<std::pair<stats::CellKey, stats::Cell>>>>
        per_language;
    for (const auto& spec : rp_inputs) {
      const auto eq = spec.find('=');
      if (eq == std::string::npos)
        throw numeric::UsageError("expected lang=path, got: " + spec);
      const std::string lang = spec.substr(0, eq);
      const std::string file = spec.substr(eq + 1);
      require_file(file, "pipeline or train-probe --out");
      std::vector<std::pair<stats::CellKey, stats::Cell>> cells;
      for (const auto& c : parse_report_cells(read_text(file)))
        cells.emplace_back(c.key, c.cell);
      per_language.emplace_back(lang, std::move(cells));
    }
    const auto matrix = stats::build_results(per_language);
    stats::RenderFormat fmt;
    if (rp_fmt == "tsv")
      fmt = stats::RenderFormat::tsv;
    else if (rp_fmt == "md")
      fmt = stats::RenderFormat::md;
    else
      throw numeric::UsageError("unknown format: " + rp_fmt);
    const std::string text = stats::render(matrix, fmt);
    if (rp_out.empty())
      std::cout << text;
    else
      write_text(rp_out, text);
    if (matrix.has_missing()) {
      std::cerr << "error: some requested cells are missing\n";
      exit_code = 1;
    }
  });

  // pipeline
  PipelineOptions po;
  auto* pl = app.add_subcommand("pipeline", "run every stage end to end");
  pl->add_option("--train", po.train)->required()->configurable(true);
  pl->add_option("--dev", po.dev)->required();
  pl->add_option("--out", po.out_dir)->required();
  pl->add_option("--repr", po.repr, "ud | ms");
  pl->add_option("--lang", po.lang, "row label in the report");
  pl->add_flag("--recursive,!--no-recursive", po.recursive,
               "also train the composition parser (default on)");
  pl->add_option("--seed", po.seed);
  pl->add_option("--epochs", po.epochs);
  pl->add_option("--aux-lemmas", po.lemma_filter, "lemma allow-list file");
  pl->callback([&]() {
    require_file(po.train, "");
    require_file(po.dev, "");
    exit_code = run_pipeline(po);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return exit_code;
}
