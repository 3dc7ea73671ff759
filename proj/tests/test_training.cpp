#include <cmath>
#include <fstream>
#include <cstring>

#include "doctest.h"
#include "fixtures.hpp"
#include "gradcheck.hpp"

#include "hag/checkpoint.hpp"
#include "hag/errors.hpp"
#include "hag/training.hpp"

using namespace hag;

namespace {

void set_all(Tensor t, double v) {
  for (double& x : t.mutable_values()) x = v;
}

RunConfig small_config() {
  RunConfig c;
  c.model = fixture::micro_config();
  c.model.max_len_multi = 8;
  c.train.epochs = 2;
  c.train.batch = 16;
  c.train.lr = 0.01;
  c.seed = 3;
  return c;
}

const Bundle& small_bundle() {
  static const Bundle b = build_bundle(fixture::toy_reviews(), small_config());
  return b;
}

std::vector<std::vector<double>> snapshot(const HagModel& m) {
  std::vector<std::vector<double>> out;
  for (const auto& p : m.parameters()) out.emplace_back(p.values().begin(), p.values().end());
  return out;
}

struct Rig {
  HagConfig cfg = fixture::micro_config();
  ModelDims dims = fixture::micro_dims();
  HagModel model{cfg, dims, 4};
  Rng rng{4};
  SideInput user, item;
  Rig() {
    fixture::randomize(model, rng, 0.4);
    user = fixture::random_side(rng, cfg, dims, 6);
    item = fixture::random_side(rng, cfg, dims, 5, true);
  }
};

}  // namespace

TEST_CASE("rigged correct logits give zero sequence losses") {
  Rig r;
  EncodedExample ex = fixture::micro_example(1, 2, 4.0);
  ex.aspect_targets = {kAspectOffset + 4, kAspectOffset + 4};
  ex.explanation_targets = {{9, 9, 9}, {9, 9}};
  for (auto* p : {&r.model.aspect_dec.out_w, &r.model.expl_dec.out_w}) set_all(*p, 0.0);
  set_all(r.model.aspect_dec.out_b, 0.0);
  set_all(r.model.expl_dec.out_b, 0.0);
  Tensor(r.model.aspect_dec.out_b).mutable_values()[kAspectOffset + 4] = 1000.0;
  Tensor(r.model.expl_dec.out_b).mutable_values()[9] = 1000.0;
  const LossBreakdown l = compute_loss(r.model, r.user, r.item, ex);
  CHECK(l.l_a == 0.0);
  CHECK(l.l_p == 0.0);
}

TEST_CASE("squared rating error") {
  Rig r;
  for (auto* p : {&r.model.fm_w, &r.model.fm_factors, &r.model.user_bias, &r.model.item_bias}) set_all(*p, 0.0);
  set_all(r.model.fm_bias, 4.0);
  const LossBreakdown l = compute_loss(r.model, r.user, r.item, fixture::micro_example(1, 2, 5.0));
  CHECK(l.rating == 4.0);
  CHECK(l.l_r == 1.0);
  CHECK(l.total == doctest::Approx(l.l_a + l.l_p + l.l_r).epsilon(1e-14));

  const LossBreakdown w = compute_loss(r.model, r.user, r.item, fixture::micro_example(1, 2, 5.0), {0.5, 2.0, 3.0});
  CHECK(w.total == doctest::Approx(0.5 * w.l_a + 2.0 * w.l_p + 3.0).epsilon(1e-14));
}

TEST_CASE("uniform aspect logits cost ln of the aspect vocabulary") {
  HagConfig cfg = fixture::micro_config();
  ModelDims dims = fixture::micro_dims();
  dims.aspect_vocab = 10;
  HagModel m(cfg, dims, 5);
  Rng rng(5);
  fixture::randomize(m, rng, 0.4);
  set_all(m.aspect_dec.out_w, 0.0);
  set_all(m.aspect_dec.out_b, 0.0);
  const SideInput u = fixture::random_side(rng, cfg, dims, 5), i = fixture::random_side(rng, cfg, dims, 5);
  EncodedExample ex = fixture::micro_example(1, 1, 3.0);
  ex.aspect_targets = {kAspectOffset + 1, kAspectOffset + 6};
  CHECK(compute_loss(m, u, i, ex).l_a == doctest::Approx(std::log(10.0)).epsilon(1e-14));
}

TEST_CASE("example loss gradients match finite differences") {
  Rig r;
  const EncodedExample ex = fixture::micro_example(1, 2, 4.0);
  r.model.zero_grad();
  Tape t;
  t.backward(example_loss(t, r.model, r.user, r.item, ex));
  std::vector<std::pair<std::string, Tensor>> subset;
  for (const auto& [name, p] : r.model.named_parameters())
    if (name.find("pool1") == 0 || name.find("expl_dec.att") == 0 || name == "w_s" || name == "fm_factors") subset.emplace_back(name, p);
  REQUIRE_FALSE(subset.empty());
  const auto rep = fixture::gradcheck(subset, [&] { return compute_loss(r.model, r.user, r.item, ex).total; });
  CHECK_MESSAGE(rep.failed == 0, rep.first_failure);
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  RunConfig c = small_config();
  c.train.lr = 0.0;
  c.train.epochs = 1;
  HagModel m(c.model, small_bundle().dims(), c.seed);
  const auto before = snapshot(m);
  Trainer tr(m, small_bundle(), c.train, c.seed);
  tr.fit();
  CHECK(tr.history().size() == 1);
  CHECK(snapshot(m) == before);
}

TEST_CASE("same seed, same loss curve") {
  auto run = [] {
    RunConfig c = small_config();
    HagModel m(c.model, small_bundle().dims(), c.seed);
    Trainer tr(m, small_bundle(), c.train, c.seed);
    tr.fit();
    return std::make_pair(format_history_csv(tr.history()), snapshot(m));
  };
  const auto a = run(), b = run();
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
  CHECK(a.first.rfind("epoch,l_a,l_p,l_r,total,valid_l_a,valid_l_p,valid_l_r,valid_total,valid_mae,lr\n", 0) == 0);
}

TEST_CASE("checkpoint round trip and corruption") {
  const auto dir = fixture::scratch("ckpt");
  RunConfig c = small_config();
  HagModel m(c.model, small_bundle().dims(), c.seed);
  Trainer tr(m, small_bundle(), c.train, c.seed);
  tr.step();
  const Checkpoint ck = tr.to_checkpoint(c);
  write_checkpoint(dir / "a.ckpt", ck);
  const Checkpoint back = read_checkpoint(dir / "a.ckpt");
  REQUIRE(back.tensors.size() == ck.tensors.size());
  for (std::size_t i = 0; i < ck.tensors.size(); ++i) {
    CHECK(back.tensors[i].name == ck.tensors[i].name);
    CHECK(back.tensors[i].shape == ck.tensors[i].shape);
    CHECK(std::memcmp(back.tensors[i].data.data(), ck.tensors[i].data.data(), ck.tensors[i].data.size() * sizeof(double)) == 0);
  }
  CHECK(format_config(back.config) == format_config(c));
  write_checkpoint(dir / "b.ckpt", back);
  CHECK(fixture::read_file(dir / "a.ckpt") == fixture::read_file(dir / "b.ckpt"));

  HagModel loaded(c.model, small_bundle().dims(), 999);
  load_model_tensors(back, loaded);
  CHECK(snapshot(loaded) == snapshot(m));

  const std::string bytes = fixture::read_file(dir / "a.ckpt");
  fixture::write_file(dir / "trunc.ckpt", bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(read_checkpoint(dir / "trunc.ckpt"), CheckpointError);

  std::string flipped = bytes;
  flipped[bytes.size() / 2 + 40] ^= 0x10;
  fixture::write_file(dir / "flip.ckpt", flipped);
  CHECK_THROWS_AS(read_checkpoint(dir / "flip.ckpt"), CheckpointError);

  std::string magic = bytes;
  magic[0] = 'X';
  fixture::write_file(dir / "magic.ckpt", magic);
  CHECK_THROWS_AS(read_checkpoint(dir / "magic.ckpt"), CheckpointError);

  std::string version = bytes;
  version[8] = 7;
  fixture::write_file(dir / "version.ckpt", version);
  try {
    read_checkpoint(dir / "version.ckpt");
    FAIL("expected a version error");
  } catch (const CheckpointError& e) {
    CHECK(std::string(e.what()).find("7") != std::string::npos);
  }
  CHECK_THROWS_AS(read_checkpoint(dir / "none.ckpt"), CheckpointError);
}

TEST_CASE("loading into a model of another shape fails") {
  RunConfig c = small_config();
  HagModel m(c.model, small_bundle().dims(), c.seed);
  Checkpoint ck;
  ck.config = c;
  ck.dims = m.dims();
  add_model_tensors(ck, m);
  HagConfig other = c.model;
  other.d1 = 6;
  HagModel wrong(other, small_bundle().dims(), c.seed);
  CHECK_THROWS_AS(load_model_tensors(ck, wrong), CheckpointError);
  ck.tensors.push_back({"stray", {1, 1}, {0.0}});
  CHECK_THROWS_AS(load_model_tensors(ck, m), CheckpointError);
  CHECK_NOTHROW(load_model_tensors(ck, m, "", false));
}

TEST_CASE("resume equals uninterrupted training") {
  const auto dir = fixture::scratch("resume");
  RunConfig c = small_config();
  c.train.epochs = 3;
  const Bundle& b = small_bundle();
  HagModel straight(c.model, b.dims(), c.seed);
  Trainer a(straight, b, c.train, c.seed);
  for (int k = 0; k < 4; ++k) a.step();  // mid-epoch
  write_checkpoint(dir / "mid.ckpt", a.to_checkpoint(c));

  HagModel resumed(c.model, b.dims(), c.seed + 1);
  Trainer r(resumed, b, c.train, c.seed + 1);
  r.restore(read_checkpoint(dir / "mid.ckpt"));
  CHECK(r.global_step() == 4);

  a.step();
  r.step();
  CHECK(snapshot(straight) == snapshot(resumed));

  a.fit();
  r.fit();
  CHECK(snapshot(straight) == snapshot(resumed));
  CHECK(format_history_csv(a.history()) == format_history_csv(r.history()));
  CHECK(a.best_epoch() == r.best_epoch());
}

TEST_CASE("vocabulary mismatch is detected") {
  nlohmann::json v = bundle_vocab_json(small_bundle());
  CHECK_NOTHROW(check_vocab_matches(v, small_bundle()));
  v["words"][5] = "zzz";
  CHECK_THROWS_AS(check_vocab_matches(v, small_bundle()), ConfigError);
}

TEST_CASE("best weights follow the lowest validation loss") {
  RunConfig c = small_config();
  c.train.epochs = 3;
  HagModel m(c.model, small_bundle().dims(), c.seed);
  Trainer tr(m, small_bundle(), c.train, c.seed);
  tr.fit();
  REQUIRE(tr.best_epoch().has_value());
  double best = 1e300;
  std::size_t at = 0;
  for (const auto& h : tr.history())
    if (h.valid.mean.total < best) best = h.valid.mean.total, at = h.epoch;
  CHECK(*tr.best_epoch() == at);
  CHECK_THROWS_AS(tr.step(), std::logic_error);
}
