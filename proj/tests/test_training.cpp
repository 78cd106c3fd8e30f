#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "fixtures.hpp"
#include "nrel/checkpoint.hpp"
#include "nrel/grad_check.hpp"
#include "nrel/synthetic.hpp"
#include "nrel/train.hpp"

using namespace nrel;

namespace {

struct Setup {
  TrainConfig cfg;
  WordEmbeddingTable words;
  std::vector<Instance> data;

  RelationModel<double> model() const {
    return RelationModel<double>(cfg, hop_task_schema(), words, collect_edge_labels(data), 2);
  }
};

Setup small_setup(EncoderKind encoder, std::size_t count = 24, std::uint64_t seed = 1) {
  Setup s;
  s.cfg.encoder = encoder;
  s.cfg.hidden = 6;
  s.cfg.word_dim = 5;
  s.cfg.edge_dim = 3;
  s.cfg.steps = 2;
  s.cfg.batch_size = 4;
  s.cfg.max_epochs = 4;
  s.cfg.patience = 10;
  s.cfg.seed = seed;
  Rng rng(seed + 1000);
  HopTaskOptions opt;
  opt.min_tokens = 4;
  opt.max_tokens = 7;
  s.words = make_random_vectors(opt.vocab, s.cfg.word_dim, rng);
  s.data = make_hop_task(count, opt, rng);
  return s;
}

std::span<const Instance> head(const std::vector<Instance>& v, std::size_t n) { return {v.data(), n}; }
std::span<const Instance> tail(const std::vector<Instance>& v, std::size_t from) {
  return {v.data() + from, v.size() - from};
}

}  // namespace

TEST_CASE("uniform predictor has loss ln 2, a confident one nearly zero") {
  auto s = small_setup(EncoderKind::grn);
  auto m = s.model();
  m.params().get("cls.W0").fill(0.0);
  m.params().get("cls.b0").fill(0.0);
  Gradients<double> g(m.params());
  CHECK(batch_loss_and_grad(m, head(s.data, 5), g) == doctest::Approx(std::log(2.0)).epsilon(1e-14));

  std::vector<Instance> yes;
  for (const auto& x : s.data)
    if (m.target(x) == 1) yes.push_back(x);
  REQUIRE(!yes.empty());
  m.params().get("cls.b0")[1] = 40.0;
  CHECK(batch_loss_and_grad(m, yes, g) < 1e-15);
}

TEST_CASE("batch gradient matches finite differences of the batch loss") {
  for (auto enc : {EncoderKind::grn, EncoderKind::dag}) {
    auto s = small_setup(enc, 6);
    auto m = s.model();
    Gradients<double> grads(m.params());
    batch_loss_and_grad(m, s.data, grads);

    Rng pick(3);
    double worst = 0;
    for (std::size_t i = 0; i < m.params().size(); ++i) {
      auto& entry = m.params().entry(i);
      if (entry.frozen) {
        CHECK(grads.values[i].empty());
        continue;
      }
      for (int trial = 0; trial < 6; ++trial) {
        const std::size_t k = pick.below(entry.value.size());
        const double keep = entry.value[k];
        const double h = 1e-5;
        Gradients<double> scratch(m.params());
        entry.value[k] = keep + h;
        const double up = batch_loss_and_grad(m, s.data, scratch);
        entry.value[k] = keep - h;
        const double down = batch_loss_and_grad(m, s.data, scratch);
        entry.value[k] = keep;
        worst = std::max(worst, relative_error(grads.values[i][k], (up - down) / (2 * h), 1e-6));
      }
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("edge-label embeddings receive gradient") {
  auto s = small_setup(EncoderKind::grn, 4);
  auto m = s.model();
  Gradients<double> grads(m.params());
  batch_loss_and_grad(m, s.data, grads);
  double norm = 0;
  for (double v : grads.values[m.params().index_of("emb.labels")].values()) norm += v * v;
  CHECK(norm > 0);
}

TEST_CASE("Adam: zero gradient, first step, frozen entries, shape errors") {
  ParamSet<double> ps;
  ps.add("w", Tensor<double>({3}, std::vector<double>{0.5, -1.0, 2.0}));
  ps.add("frozen", Tensor<double>({2}, std::vector<double>{7.0, 8.0}), true);
  AdamOptions opt;

  AdamState<double> st(ps);
  Gradients<double> zero(ps);
  const auto before = ps.get("w");
  adam_step(ps, zero, st, opt);
  CHECK(ps.get("w") == before);

  Gradients<double> g(ps);
  g.values[0] = Tensor<double>({3}, std::vector<double>{0.3, -2.0, 1e-3});
  AdamState<double> fresh(ps);
  adam_step(ps, g, fresh, opt);
  for (std::size_t k = 0; k < 3; ++k) {
    const double gk = g.values[0][k];
    const double want = before[k] - opt.lr * gk / (std::abs(gk) + opt.eps);
    CHECK(ps.get("w")[k] == doctest::Approx(want).epsilon(1e-12));
  }

  for (int i = 0; i < 100; ++i) adam_step(ps, g, fresh, opt);
  CHECK(ps.get("frozen")[0] == 7.0);
  CHECK(ps.get("frozen")[1] == 8.0);

  g.values[0] = Tensor<double>({4});
  CHECK_THROWS_AS(adam_step(ps, g, fresh, opt), ShapeError);
}

TEST_CASE("frozen word table is unchanged by training") {
  auto s = small_setup(EncoderKind::grn, 16);
  auto m = s.model();
  const auto words = m.params().get("emb.words");
  const auto labels = m.params().get("emb.labels");
  const auto out = train(m, head(s.data, 12), tail(s.data, 12));
  CHECK(out.model.params().get("emb.words") == words);
  CHECK_FALSE(out.model.params().get("emb.labels") == labels);
}

TEST_CASE("loss on a fixed batch decreases over the first ten Adam steps") {
  for (auto enc : {EncoderKind::grn, EncoderKind::dag}) {
    auto s = small_setup(enc, 8);
    auto m = s.model();
    AdamState<double> st(m.params());
    Gradients<double> g(m.params());
    std::vector<double> losses;
    for (int step = 0; step <= 10; ++step) {
      g.zero();
      losses.push_back(batch_loss_and_grad(m, s.data, g));
      if (step < 10) adam_step(m.params(), g, st, {});
    }
    for (std::size_t i = 1; i < losses.size(); ++i) CHECK(losses[i] < losses[i - 1]);
  }
}

TEST_CASE("training is deterministic for a fixed seed") {
  for (auto enc : {EncoderKind::grn, EncoderKind::dag}) {
    auto s = small_setup(enc);
    s.cfg.dropout = 0.3;
    auto a = train(s.model(), head(s.data, 16), tail(s.data, 16));
    auto b = train(s.model(), head(s.data, 16), tail(s.data, 16));
    REQUIRE(a.log.size() == b.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i) {
      CHECK(a.log[i].train_loss == b.log[i].train_loss);
      CHECK(a.log[i].dev_acc == b.log[i].dev_acc);
    }
    for (std::size_t i = 0; i < a.model.params().size(); ++i)
      CHECK(a.model.params().entry(i).value == b.model.params().entry(i).value);
  }
}

TEST_CASE("threads do not change training results") {
  auto s = small_setup(EncoderKind::grn);
  auto one = train(s.model(), head(s.data, 16), tail(s.data, 16));
  s.cfg.threads = 4;
  auto four = train(s.model(), head(s.data, 16), tail(s.data, 16));
  REQUIRE(one.log.size() == four.log.size());
  for (std::size_t i = 0; i < one.log.size(); ++i) CHECK(one.log[i].train_loss == four.log[i].train_loss);
}

TEST_CASE("flat dev curve stops after patience epochs") {
  auto s = small_setup(EncoderKind::grn);
  s.cfg.learning_rate = 1e-12;
  s.cfg.dropout = 0.0;
  s.cfg.patience = 5;
  s.cfg.max_epochs = 50;
  const auto r = train(s.model(), head(s.data, 16), tail(s.data, 16));
  CHECK(r.best_epoch == 1);
  CHECK(r.log.size() == 6);
  CHECK(r.stopped_early);
}

TEST_CASE("returned model carries the best logged dev accuracy") {
  auto s = small_setup(EncoderKind::grn, 40);
  s.cfg.max_epochs = 8;
  s.cfg.learning_rate = 0.02;
  const auto dev = tail(s.data, 28);
  const auto r = train(s.model(), head(s.data, 28), dev);
  const double got = evaluate(r.model, dev, TaskMode::binary).accuracy();
  CHECK(got == r.best_dev_acc);
  for (const auto& e : r.log) CHECK(got >= e.dev_acc);
  CHECK(r.log[r.best_epoch - 1].dev_acc == r.best_dev_acc);
}

TEST_CASE("training errors") {
  auto s = small_setup(EncoderKind::grn, 8);
  std::vector<Instance> none;
  CHECK_THROWS_AS(train(s.model(), none, s.data), std::invalid_argument);
  CHECK_THROWS_AS(train(s.model(), s.data, none), std::invalid_argument);

  auto bad = s.model();
  bad.params().get("cls.W0")[0] = std::numeric_limits<double>::quiet_NaN();
  try {
    train(bad, s.data, s.data);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("epoch 1") != std::string::npos);
  }
}

TEST_CASE("evaluation: perfect predictions, single-sentence subset, mode mismatch") {
  auto s = small_setup(EncoderKind::grn, 12);
  auto m = s.model();
  m.params().get("cls.W0").fill(0.0);
  m.params().get("cls.b0")[1] = 5.0;
  std::vector<Instance> yes;
  for (const auto& x : s.data)
    if (m.target(x) == 1) yes.push_back(x);
  const auto r = evaluate(m, yes, TaskMode::binary);
  CHECK(r.accuracy() == 1.0);
  CHECK(r.single_total == yes.size());
  CHECK(r.confusion[1][1] == yes.size());
  CHECK_THROWS_AS(evaluate(m, yes, TaskMode::multiclass), std::invalid_argument);

  s.cfg.mode = TaskMode::multiclass;
  auto multi = s.model();
  CHECK_NOTHROW(evaluate(multi, s.data, TaskMode::binary));
}

TEST_CASE("checkpoint round trip reproduces predictions exactly") {
  for (auto enc : {EncoderKind::grn, EncoderKind::dag}) {
    auto s = small_setup(enc, 20);
    s.cfg.max_epochs = 2;
    const auto r = train(s.model(), head(s.data, 14), tail(s.data, 14));
    fixture::TempDir dir;
    save_checkpoint(dir.file("model.ckpt"), r.model);
    const auto back = load_checkpoint(dir.file("."));
    CHECK(back.config().to_text() == r.model.config().to_text());
    CHECK(back.edge_labels() == r.model.edge_labels());
    CHECK(back.vocab().words() == r.model.vocab().words());
    REQUIRE(back.params().size() == r.model.params().size());
    for (std::size_t i = 0; i < back.params().size(); ++i) {
      CHECK(back.params().entry(i).name == r.model.params().entry(i).name);
      CHECK(back.params().entry(i).frozen == r.model.params().entry(i).frozen);
      CHECK(back.params().entry(i).value == r.model.params().entry(i).value);
    }
    CHECK(evaluate(back, s.data, TaskMode::binary).correct == evaluate(r.model, s.data, TaskMode::binary).correct);
    for (const auto& x : s.data) CHECK(back.predict(x) == r.model.predict(x));
  }
}

TEST_CASE("damaged checkpoints are rejected") {
  auto s = small_setup(EncoderKind::grn, 4);
  fixture::TempDir dir;
  save_checkpoint(dir.file("m.ckpt"), s.model());
  std::ifstream in(dir.file("m.ckpt"), std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), {});
  std::ofstream(dir.file("cut.ckpt"), std::ios::binary) << bytes.substr(0, bytes.size() / 2);
  CHECK_THROWS(load_checkpoint(dir.file("cut.ckpt")));
  auto wrong = bytes;
  wrong[0] = 'X';
  std::ofstream(dir.file("magic.ckpt"), std::ios::binary) << wrong;
  CHECK_THROWS(load_checkpoint(dir.file("magic.ckpt")));
  CHECK_THROWS(load_checkpoint(dir.file("missing.ckpt")));
}

TEST_CASE("config text round trip and validation") {
  TrainConfig c;
  c.learning_rate = 0.0123456789;
  c.encoder = EncoderKind::dag;
  c.mode = TaskMode::multiclass;
  c.grn_mask = GrnMask::concat;
  c.candidate = ad::Activation::tanh;
  c.pooling = Pooling::last;
  c.seed = 987654321987ULL;
  c.track_train_acc = true;
  const auto back = TrainConfig::parse(c.to_text());
  CHECK(back.to_text() == c.to_text());
  CHECK(back.learning_rate == c.learning_rate);

  const auto d = TrainConfig::parse("# defaults\n\nhidden = 12\n");
  CHECK(d.hidden == 12);
  CHECK(d.learning_rate == 0.001);
  CHECK(d.dropout == 0.3);
  CHECK(d.batch_size == 8);
  CHECK(d.steps == 5);
  CHECK(d.word_dim == 100);
  CHECK(d.edge_dim == 3);
  CHECK(d.max_epochs == 100);
  CHECK(d.patience == 10);
  CHECK(TrainConfig().hidden == 150);

  CHECK_THROWS(TrainConfig::parse("hiden=3\n"));
  CHECK_THROWS(TrainConfig::parse("hidden=0\n"));
  CHECK_THROWS(TrainConfig::parse("dropout=1.5\n"));
  CHECK_THROWS(TrainConfig::parse("encoder=lstm\n"));
  CHECK_THROWS(TrainConfig::parse("batch_size=abc\n"));
  CHECK_THROWS(TrainConfig::parse("no equals sign\n"));
}

TEST_CASE("fold splits") {
  Rng rng(7);
  const auto split = FoldSplit::generate(23, 5, rng);
  CHECK(split.folds.size() == 5);
  CHECK_NOTHROW(split.validate(23));
  std::set<std::size_t> all;
  for (const auto& f : split.folds) {
    CHECK(f.size() >= 4);
    CHECK(f.size() <= 5);
    all.insert(f.begin(), f.end());
  }
  CHECK(all.size() == 23);

  fixture::TempDir dir;
  split.save(dir.file("folds.json"));
  CHECK(FoldSplit::load(dir.file("folds.json")).folds == split.folds);
  CHECK(FoldSplit::load(dir.write("bare.json", "[[0,1],[2],[3]]")).folds.size() == 3);
  CHECK_THROWS_AS(FoldSplit::load(dir.write("bad.json", "{\"folds\": 3}")), FormatError);

  CHECK_THROWS(FoldSplit{{{0, 1}, {1, 2}}}.validate(3));
  CHECK_THROWS(FoldSplit{{{0}, {2}}}.validate(3));
  CHECK_THROWS(FoldSplit{{{0, 1}, {2, 3}}}.validate(3));

  CHECK(dev_carve_size(4000, 200) == 200);
  CHECK(dev_carve_size(40, 200) == 8);
  CHECK(dev_carve_size(3, 200) == 1);
}

TEST_CASE("cross-validation on identical instances scores every fold all-or-nothing") {
  auto s = small_setup(EncoderKind::grn, 30);
  s.cfg.max_epochs = 2;
  std::vector<Instance> same(15, s.data.front());
  Rng rng(8);
  const auto split = FoldSplit::generate(same.size(), 5, rng);
  const auto cv = cross_validate(same, split, s.cfg, hop_task_schema(), s.words);
  REQUIRE(cv.folds.size() == 5);
  double sum = 0;
  for (const auto& f : cv.folds) {
    const double a = f.test.accuracy();
    CHECK((a == 0.0 || a == 1.0));
    CHECK(f.test.total == 3);
    CHECK(f.dev_size >= 1);
    CHECK(f.train_size + f.dev_size == 12);
    sum += a;
  }
  CHECK(cv.mean_accuracy == doctest::Approx(sum / 5).epsilon(1e-15));
}
