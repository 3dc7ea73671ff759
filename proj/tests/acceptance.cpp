// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

#include "hag/checkpoint.hpp"
#include "hag/metrics.hpp"
#include "hag/pipeline.hpp"
#include "hag/syngraph.hpp"
#include "hag/text.hpp"
#include "hag/training.hpp"

using namespace hag;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Collects failed checks; the first one is echoed in the summary line.
struct Verdict {
  std::size_t checks = 0;
  std::vector<std::string> failures;
  std::string detail;

  void expect(bool ok, const std::string& what) {
    ++checks;
    if (!ok) failures.push_back(what);
  }
  bool ok() const { return failures.empty(); }
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double row_sum(const Tensor& t, std::size_t r) {
  double s = 0.0;
  for (std::size_t c = 0; c < t.cols(); ++c) s += t.at(r, c);
  return s;
}

std::string read_all(const fs::path& p) { return fixture::read_file(p); }

// Every regular file under a and b has an identical twin.
bool same_tree(const fs::path& a, const fs::path& b, std::string& why) {
  std::size_t n = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    ++n;
    const fs::path twin = b / fs::relative(e.path(), a);
    if (!fs::exists(twin) || read_all(e.path()) != read_all(twin)) {
      why = fs::relative(e.path(), a).string();
      return false;
    }
  }
  std::size_t m = 0;
  for (const auto& e : fs::recursive_directory_iterator(b)) m += e.is_regular_file();
  if (m != n) why = "file count " + std::to_string(n) + " vs " + std::to_string(m);
  return m == n && n > 0;
}

// ---- 1: gradients ----------------------------------------------------------

Verdict full_gradcheck() {
  Verdict v;
  const auto t0 = Clock::now();
  const HagConfig cfg = fixture::micro_config();
  const ModelDims dims = fixture::micro_dims();
  HagModel model(cfg, dims, 11);
  Rng rng(11);
  fixture::randomize(model, rng, 0.5);
  const SideInput u = fixture::random_side(rng, cfg, dims, 7), i = fixture::random_side(rng, cfg, dims, 6, true);
  const SideInput cold = fixture::random_side(rng, cfg, dims, 0, true);
  const EncodedExample warm = fixture::micro_example(1, 2, 4.0);
  const EncodedExample cold_ex = fixture::micro_example(0, 0, 2.0);

  model.zero_grad();
  {
    Tape a, b;
    a.backward(example_loss(a, model, u, i, warm));
    b.backward(example_loss(b, model, cold, cold, cold_ex));
  }
  auto loss = [&] { return compute_loss(model, u, i, warm).total + compute_loss(model, cold, cold, cold_ex).total; };
  const auto rep = fixture::gradcheck(model.named_parameters(), loss, 1e-5, 1e-4, 1e-6);
  const double secs = seconds_since(t0);
  v.expect(rep.failed == 0, rep.first_failure);
  v.expect(rep.checked > 0, "no entries checked");
  v.expect(secs < 120.0, "took " + fmt("%.1f s", secs));
  v.detail = std::to_string(model.named_parameters().size()) + " tensors, " + std::to_string(rep.checked) +
             " entries, " + std::to_string(rep.failed) + " failed, worst abs " + fmt("%.2e", rep.worst_abs) + ", " +
             fmt("%.1f s", secs);
  return v;
}

// ---- 2: pooling sizes and kept sets ----------------------------------------

Verdict pooling_oracle() {
  Verdict v;
  const ModelDims dims = fixture::micro_dims();
  Rng rng(21);
  std::size_t layers_checked = 0;
  for (std::size_t tenths : {1, 3, 5, 7, 9}) {
    HagConfig cfg = fixture::micro_config();
    cfg.pool_ratio = static_cast<double>(tenths) / 10.0;
    cfg.pool_layers = 3;
    HagModel model(cfg, dims, 100 + tenths);
    fixture::randomize(model, rng, 0.6);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 5 + uniform_index(rng, 46);
      const GraphInput g = fixture::random_graph(rng, n, dims.vocab, dims.relations, 0.2);
      Tape t(false);
      const Tensor fq = encode_aspect(t, model, std::vector<std::size_t>{1 + uniform_index(rng, dims.vocab - 1)});
      GraphState s = initial_state(t, model, g);
      for (std::size_t l = 0; l < cfg.pool_layers; ++l) {
        const Tensor enc = gat_encode(t, model, l, s);
        const PoolOutput p = agp(t, model, l, s, enc, fq);
        const std::string where = "rho 0." + std::to_string(tenths) + " trial " + std::to_string(trial) + " layer " +
                                  std::to_string(l);
        const std::size_t k = oracle::ceil_tenths(s.n, tenths);
        v.expect(pooled_size(s.n, cfg.pool_ratio) == k, where + ": K");
        v.expect(p.next.n == k, where + ": pooled rows");
        const auto score = oracle::importance(oracle::to_mat(enc), oracle::row_of(fq, 0), oracle::to_mat(model.score_proj));
        v.expect(p.kept == oracle::kept_by_rank(score, k), where + ": kept set");
        s = p.next;
        ++layers_checked;
      }
    }
  }
  v.detail = std::to_string(layers_checked) + " pooling layers over 1000 graphs";
  return v;
}

// ---- 3: normalization ------------------------------------------------------

Verdict normalization() {
  Verdict v;
  const HagConfig cfg = fixture::micro_config();
  const ModelDims dims = fixture::micro_dims();
  HagModel model(cfg, dims, 31);
  Rng rng(31);
  double worst = 0.0;
  for (int pass = 0; pass < 1000; ++pass) {
    if (pass % 100 == 0) fixture::randomize(model, rng, 0.3 + 0.2 * (pass / 100));
    const GraphInput g = fixture::random_graph(rng, 2 + uniform_index(rng, 30), dims.vocab, dims.relations, 0.3);
    Tape t(false);
    Tensor alpha;
    gat_encode(t, model, 0, initial_state(t, model, g), &alpha);
    for (std::size_t h = 0; h < g.adj.n; ++h) {
      bool has = false;
      for (std::size_t j = 0; j < g.adj.n; ++j) has = has || g.adj.a[h * g.adj.n + j];
      const double dev = std::abs(row_sum(alpha, h) - (has ? 1.0 : 0.0));
      worst = std::max(worst, dev);
      v.expect(dev <= 1e-12, "alpha row " + std::to_string(h) + " pass " + std::to_string(pass));
    }

    const SideInput u = fixture::random_side(rng, cfg, dims, 3 + uniform_index(rng, 10));
    const SideInput i = fixture::random_side(rng, cfg, dims, pass % 7 == 0 ? 0 : 4, true);
    const PairEncoding enc = encode_pair(t, model, u, i, 1, 2);
    const DecoderContext ctx = DecoderContext::build(t, model, enc);
    const StepOutput a = aspect_step(t, model, ctx, initial_aspect_state(model, ctx), kBosAspect);
    const StepOutput e =
        explanation_step(t, model, ctx, initial_explanation_state(model, a.state.h), Vocabulary::kBos, a.state.h);
    for (const Tensor& d : {t.softmax_row(a.logits), t.softmax_row(e.logits), a.att_u.weights, a.att_i.weights,
                            e.att_u.weights, e.att_i.weights}) {
      const double dev = std::abs(row_sum(d, 0) - 1.0);
      worst = std::max(worst, dev);
      v.expect(dev <= 1e-12, "decoder distribution pass " + std::to_string(pass));
    }
  }
  v.detail = "1000 passes, worst deviation " + fmt("%.1e", worst);
  return v;
}

// ---- 4: factorization machine ----------------------------------------------

Verdict fm_identity() {
  Verdict v;
  Rng rng(41);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 40), k = 1 + uniform_index(rng, 8);
    std::vector<double> x(n), f(n * k);
    for (auto& a : x) a = uniform(rng, -2, 2);
    for (auto& a : f) a = uniform(rng, -1, 1);
    Tape t(false);
    const double got = fm_pairwise(t, Tensor::constant({1, n}, x), Tensor::constant({n, k}, f)).at(0, 0);
    const double want = oracle::fm_pairwise(x, oracle::to_mat(Tensor::constant({n, k}, f)));
    worst = std::max(worst, std::abs(got - want));
  }
  v.expect(worst <= 1e-9, "max error " + fmt("%.2e", worst));
  v.detail = "100 inputs, max error " + fmt("%.1e", worst);
  return v;
}

// ---- 5: metrics ------------------------------------------------------------

Verdict metric_oracles() {
  Verdict v;
  static const char* kWords[] = {"the", "cat", "sat", "on", "a", "mat", "dog"};
  Rng rng(51);
  auto sentence = [&] {
    Tokens t(1 + uniform_index(rng, 8));
    for (auto& w : t) w = kWords[uniform_index(rng, 7)];
    return t;
  };
  std::vector<EvalPair> pairs;
  for (int k = 0; k < 20; ++k) {
    EvalPair p;
    p.candidate = sentence();
    p.references = {sentence()};
    if (k % 3 == 0) p.references.push_back(sentence());
    pairs.push_back(p);
  }
  double worst = 0.0;
  const auto b = bleu(pairs, 4), bo = oracle::bleu(pairs, 4);
  for (std::size_t n = 0; n < 4; ++n) worst = std::max(worst, std::abs(b[n] - bo[n]));
  const auto r = rouge(pairs), ro = oracle::rouge(pairs);
  worst = std::max({worst, std::abs(r.rouge1 - ro.rouge1), std::abs(r.rougeL - ro.rougeL)});
  worst = std::max(worst, std::abs(meteor(pairs) - oracle::meteor(pairs)));
  std::vector<std::vector<Tokens>> gen;
  std::vector<std::vector<std::string>> gold;
  std::vector<double> pred, truth;
  for (const auto& p : pairs) {
    gen.push_back({p.candidate});
    gold.push_back({p.references[0][0]});
    pred.push_back(uniform(rng, 1, 5));
    truth.push_back(static_cast<double>(1 + uniform_index(rng, 5)));
  }
  worst = std::max(worst, std::abs(fmr(gen, gold) - oracle::fmr(gen, gold)));
  worst = std::max(worst, std::abs(mae(pred, truth) - oracle::mae(pred, truth)));
  v.expect(worst <= 1e-9, "oracle disagreement " + fmt("%.2e", worst));

  const double clipped = bleu({{split_ws("the the the"), {split_ws("the cat")}}}, 1)[0];
  v.expect(std::abs(clipped - 1.0 / 3.0) <= 1e-12, "clipped BLEU-1 " + fmt("%.6f", clipped));
  const double rl = rouge({{split_ws("the cat sat"), {split_ws("the cat")}}}).rougeL;
  v.expect(std::abs(rl - 0.8) <= 1e-12, "ROUGE-L " + fmt("%.6f", rl));

  HagConfig cfg = fixture::micro_config();
  ModelDims dims = fixture::micro_dims();
  dims.aspect_vocab = 12;
  HagModel m(cfg, dims, 5);
  Rng mr(5);
  fixture::randomize(m, mr, 0.4);
  for (double& x : Tensor(m.aspect_dec.out_w).mutable_values()) x = 0.0;
  for (double& x : Tensor(m.aspect_dec.out_b).mutable_values()) x = 0.0;
  const SideInput u = fixture::random_side(mr, cfg, dims, 5), i = fixture::random_side(mr, cfg, dims, 5);
  const double la = compute_loss(m, u, i, fixture::micro_example(1, 1, 3.0)).l_a;
  v.expect(std::abs(la - std::log(12.0)) <= 1e-12, "uniform l_a " + fmt("%.12f", la));
  v.detail = "20 random pairs, max error " + fmt("%.1e", worst) + ", BLEU-1 1/3, ROUGE-L 0.8, l_a = ln 12";
  return v;
}

// ---- 6: toy overfit --------------------------------------------------------

Verdict toy_overfit() {
  Verdict v;
  const auto t0 = Clock::now();
  RunConfig cfg = load_config(std::string(HAG_SOURCE_DIR) + "/configs/toy.conf");
  const Bundle bundle = build_bundle(fixture::toy_reviews(), cfg);
  HagModel model(cfg.model, bundle.dims(), cfg.seed);
  Trainer trainer(model, bundle, cfg.train, cfg.seed);
  trainer.fit();
  const auto& h = trainer.history();
  const MetricReport rep = score(generate_examples(model, bundle, bundle.train), bundle);
  const double secs = seconds_since(t0);
  const double first = h.front().train.total, last = h.back().train.total;
  v.expect(last < 0.1 * first, "final loss " + fmt("%.4f", last) + " vs epoch 1 " + fmt("%.4f", first));
  v.expect(rep.fmr >= 0.8, "FMR " + fmt("%.3f", rep.fmr));
  v.expect(rep.mae <= 0.2, "MAE " + fmt("%.3f", rep.mae));
  v.expect(rep.bleu1 >= 60.0, "BLEU-1 " + fmt("%.2f", rep.bleu1));
  v.expect(secs < 600.0, "took " + fmt("%.0f s", secs));
  v.detail = std::to_string(h.size()) + " epochs, loss " + fmt("%.3f", first) + " -> " + fmt("%.4f", last) +
             ", train FMR " + fmt("%.3f", rep.fmr) + ", MAE " + fmt("%.3f", rep.mae) + ", BLEU-1 " +
             fmt("%.2f", rep.bleu1) + ", " + fmt("%.0f s", secs);
  return v;
}

// ---- 7: merged syntax graph ------------------------------------------------

Verdict merged_pair_golden() {
  Verdict v;
  const std::string dir = std::string(HAG_SOURCE_DIR) + "/tests/data/merged_pair/";
  std::vector<DependencyTree> pruned;
  for (const auto& t : parse_conllu(read_all(dir + "reviews.conllu"))) pruned.push_back(prune(t, default_prune_relations()));
  const std::string got = serialize(canonicalize(merge(pruned)));
  v.expect(got == read_all(dir + "graph.txt"), "serialized graph differs from golden");
  v.detail = std::to_string(got.size()) + " bytes compared";
  return v;
}

// ---- 8: ablations and sweeps -----------------------------------------------

Verdict ablations_and_sweeps() {
  Verdict v;
  const auto t0 = Clock::now();
  RunConfig cfg = load_config(std::string(HAG_SOURCE_DIR) + "/configs/toy.conf");
  cfg.train.epochs = 10;
  const auto reviews = fixture::toy_reviews();
  const std::string header_tail = "\tFMR\tBLEU-4\tROUGE-L\tMAE\n";

  auto table = [&](const std::string& key, const std::vector<TableRow>& rows, std::size_t want) {
    const std::string text = format_table(key, rows);
    std::cout << text;
    v.expect(rows.size() == want, key + ": " + std::to_string(rows.size()) + " rows");
    v.expect(text.rfind(key + header_tail, 0) == 0, key + ": header");
    for (const auto& r : rows) {
      v.expect(std::isfinite(r.report.mae) && r.report.fmr >= 0.0 && r.report.fmr <= 1.0, key + " " + r.label + ": range");
    }
  };
  table("variant", run_ablation(reviews, cfg, {"full", "no_agp", "gat_only", "no_relation"}), 4);
  table("n_aspects", run_sweep(reviews, cfg, "n_aspects=2,4,6,8"), 4);
  table("pool_ratio", run_sweep(reviews, cfg, "pool_ratio=0.1,0.3,0.5,0.7,0.9"), 5);
  table("pool_layers", run_sweep(reviews, cfg, "pool_layers=1,2,3,4"), 4);
  v.detail = "17 runs of 10 epochs, " + fmt("%.0f s", seconds_since(t0));
  return v;
}

// ---- 9: reproducibility ----------------------------------------------------

Verdict reproducibility() {
  Verdict v;
  const fs::path dir = fixture::scratch("acceptance_repro");
  RunConfig cfg = fixture::toy_config(dir);
  cfg.train.epochs = 4;
  const fs::path work(cfg.workdir);
  std::string why;

  cmd_preprocess(cfg);
  fs::copy(bundle_dir(cfg), dir / "bundle_a", fs::copy_options::recursive);
  cmd_preprocess(cfg);
  v.expect(same_tree(dir / "bundle_a", bundle_dir(cfg), why), "preprocess rerun differs: " + why);

  const TrainResult a = cmd_train(cfg);
  const std::string best_a = read_all(a.best), last_a = read_all(a.last), hist_a = read_all(work / "history.csv");
  cmd_generate(cfg, a.best, "", "test", dir / "gen_a.jsonl");
  const TrainResult b = cmd_train(cfg);
  v.expect(read_all(b.best) == best_a, "best.ckpt differs between runs");
  v.expect(read_all(b.last) == last_a, "last.ckpt differs between runs");
  v.expect(read_all(work / "history.csv") == hist_a, "history differs between runs");
  cmd_generate(cfg, b.best, "", "test", dir / "gen_b.jsonl");
  v.expect(read_all(dir / "gen_a.jsonl") == read_all(dir / "gen_b.jsonl"), "generations differ between runs");

  // interrupt mid-epoch, resume from the file, compare with the straight run
  const Bundle bundle = load_bundle(bundle_dir(cfg), cfg);
  HagModel m(cfg.model, bundle.dims(), cfg.seed);
  Trainer t(m, bundle, cfg.train, cfg.seed);
  const std::size_t stop = t.batches_per_epoch() + t.batches_per_epoch() / 2 + 1;
  for (std::size_t k = 0; k < stop; ++k) t.step();
  write_checkpoint(dir / "interrupted.ckpt", t.to_checkpoint(cfg));
  const TrainResult r = cmd_train(cfg, dir / "interrupted.ckpt");
  v.expect(read_all(r.last) == last_a, "resumed last.ckpt differs");
  v.expect(read_all(r.best) == best_a, "resumed best.ckpt differs");
  v.expect(read_all(work / "history.csv") == hist_a, "resumed history differs");
  v.detail = "bundle, checkpoints, history and generations byte-identical; resumed at step " + std::to_string(stop);
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"full-model gradient check", full_gradcheck},
      {"pooling sizes and kept sets", pooling_oracle},
      {"attention and output distributions normalized", normalization},
      {"FM pairwise identity", fm_identity},
      {"metric oracles and worked examples", metric_oracles},
      {"toy corpus overfit", toy_overfit},
      {"merged syntax graph golden file", merged_pair_golden},
      {"ablation and sweep tables", ablations_and_sweeps},
      {"byte-identical reruns and resume", reproducibility},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto& [name, run] = criteria[k];
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v.failures.push_back(std::string("exception: ") + e.what());
    }
    std::ostringstream line;
    line << "criterion " << k + 1 << ": " << (v.ok() ? "PASS" : "FAIL") << "  " << name;
    if (!v.detail.empty()) line << " (" << v.detail << ")";
    if (!v.ok()) {
      line << "; " << v.failures.size() << " failed check(s), first: " << v.failures.front();
      ++failed;
    }
    std::cout << line.str() << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << "\n";
  return failed == 0 ? 0 : 1;
}
