#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "bioslam/error.hpp"
#include "bioslam/model.hpp"
#include "bioslam/synthworld.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace bioslam;

namespace {

const ModelDims kSmall{16, 8, 4, 6};

ModelParams random_everything(const ModelDims& dims, std::uint64_t seed, double scale = 0.5) {
  ModelParams p = ModelParams::zeros(dims);
  std::mt19937_64 rng(seed);
  p.assign(oracle::random_vec(p.parameter_count(), rng, scale));
  return p;
}

InputRef feature_ref(const Vec& v) { return {InputKind::feature, v}; }
InputRef latent_ref(const Vec& v) { return {InputKind::latent, v}; }

Vec dft(const Vec& x) { return oracle::naive_dft_magnitude(x); }

// Three fixed W = 4 signals whose standardized non-DC spectra are (-1, 1),
// (0, 0) and (1, -1).
const Vec kSigA{1, 0, 1, 0};
const Vec kSigB{1, 0, 0, 0};
const Vec kSigC{1, 0, -1, 0};

// Solves the 3x3 system m * x = b by Cramer's rule.
std::array<double, 3> solve3(const std::array<std::array<double, 3>, 3>& m, const std::array<double, 3>& b) {
  auto det = [](const std::array<std::array<double, 3>, 3>& a) {
    return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
           a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  };
  const double d = det(m);
  std::array<double, 3> x{};
  for (int c = 0; c < 3; ++c) {
    auto mc = m;
    for (int r = 0; r < 3; ++r) mc[r][c] = b[r];
    x[c] = det(mc) / d;
  }
  return x;
}

}  // namespace

TEST_CASE("invariant transform") {
  SUBCASE("constant signal is DC only") {
    const Vec f = invariant_transform(Vec(64, -1.5));
    CHECK(f.size() == 33);
    CHECK(f[0] == doctest::Approx(96.0).epsilon(1e-14));
    for (std::size_t k = 1; k < f.size(); ++k) CHECK(std::abs(f[k]) < 1e-12);
  }
  SUBCASE("matches a naive DFT and is shift invariant") {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 20; ++t) {
      const Vec x = oracle::random_vec(64, rng);
      const Vec f = invariant_transform(x);
      CHECK(oracle::relative_l2(f, dft(x)) < 1e-9);
      for (std::size_t s = 0; s < 64; s += 7) CHECK(oracle::relative_l2(invariant_transform(circular_shift(x, s)), f) < 1e-9);
      for (double v : f) CHECK(v >= 0.0);
    }
  }
  SUBCASE("length checks") {
    CHECK_THROWS_AS(invariant_transform(Vec(63, 1.0)), Error);
    CHECK_THROWS_AS(invariant_transform(Vec(32, 1.0), 64), Error);
  }
}

TEST_CASE("encoder") {
  const ModelDims dims;
  std::mt19937_64 rng(2);
  const Vec x = oracle::random_vec(dims.ring_width, rng);

  SUBCASE("zero parameters give a zero code") {
    const ModelParams p = ModelParams::zeros(dims);
    CHECK(encode(p, x).z == Vec(dims.latent, 0.0));
  }
  SUBCASE("shift invariance end to end") {
    const ModelParams p = ModelParams::random(dims, 3);
    const LatentCode z = encode(p, x);
    const Descriptor f = describe(p, z);
    for (std::size_t s = 0; s < dims.ring_width; ++s) {
      const Vec xs = circular_shift(x, s);
      CHECK(oracle::relative_l2(encode(p, xs).z, z.z) < 1e-9);
      const Descriptor fs = describe(p, encode(p, xs));
      CHECK(oracle::euclidean_ld(Vec(fs.values().begin(), fs.values().end()), Vec(f.values().begin(), f.values().end())) <
            1e-7);
    }
  }
  SUBCASE("golden code") {
    const ModelParams p = ModelParams::random(dims, 20240607);
    WorldConfig wc;
    const World w = generate_world(wc, 99);
    const Vec z = encode(p, render(w, 1, 17, 555).signal).z;
    const std::string path = std::string(BIOSLAM_SOURCE_DIR) + "/tests/data/encode_golden.txt";
    if (std::getenv("BIOSLAM_WRITE_GOLDEN")) {
      std::ofstream out(path);
      for (double v : z) out << std::hexfloat << v << '\n';
    }
    std::ifstream in(path);
    REQUIRE(in.good());
    Vec golden;
    std::string line;
    while (std::getline(in, line)) golden.push_back(std::strtod(line.c_str(), nullptr));
    REQUIRE(golden.size() == z.size());
    for (std::size_t i = 0; i < z.size(); ++i) CHECK(z[i] == golden[i]);
  }
  SUBCASE("wrong feature size") {
    const ModelParams p = ModelParams::zeros(dims);
    CHECK_THROWS_AS(encode_feature(p, Vec(10, 1.0)), Error);
  }
}

TEST_CASE("descriptor head") {
  SUBCASE("identity head normalizes") {
    ModelParams p = ModelParams::zeros({64, 32, 16, 16});
    for (std::size_t i = 0; i < 16; ++i) p.head.weight(i, i) = 1.0;
    Vec z(16, 0.0);
    z[0] = 2.0;
    const Descriptor f = describe(p, {z});
    CHECK(f[0] == 1.0);
    for (std::size_t i = 1; i < 16; ++i) CHECK(f[i] == 0.0);
  }
  SUBCASE("unit norm and positive scale invariance") {
    const ModelParams p = ModelParams::random(ModelDims{}, 4);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> c(0.01, 100.0);
    for (int i = 0; i < 1000; ++i) {
      LatentCode z{oracle::random_vec(16, rng)};
      const Descriptor f = describe(p, z);
      CHECK(std::abs(l2_norm(f.values()) - 1.0) < 1e-12);
      LatentCode zs = z;
      const double k = c(rng);
      for (double& v : zs.z) v *= k;
      CHECK(dot(describe(p, zs).values(), f.values()) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  SUBCASE("zero head output is degenerate") {
    const ModelParams p = ModelParams::zeros(ModelDims{});
    try {
      describe(p, {Vec(16, 1.0)});
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::degenerate_descriptor);
    }
  }
}

TEST_CASE("decoder") {
  const ModelDims dims;
  CHECK(decode(ModelParams::zeros(dims), {Vec(16, 0.7)}) == Vec(33, 0.0));
  const ModelParams p = ModelParams::random(dims, 6);
  std::mt19937_64 rng(7);
  for (int i = 0; i < 10; ++i) CHECK(decode(p, {oracle::random_vec(16, rng)}).size() == dims.feature_dim());
}

TEST_CASE("augmentation") {
  std::mt19937_64 rng(8);
  const Vec x = oracle::random_vec(64, rng);
  SUBCASE("shift only keeps the invariant feature") {
    const AugmentConfig pure{0.0, 1.0, 1.0};
    for (std::uint64_t s = 0; s < 10; ++s) CHECK(oracle::relative_l2(dft(augment(x, pure, s)), dft(x)) < 1e-12);
  }
  SUBCASE("seeded") {
    const AugmentConfig cfg;
    CHECK(augment(x, cfg, 5) == augment(x, cfg, 5));
    CHECK_FALSE(augment(x, cfg, 5) == augment(x, cfg, 6));
  }
}

TEST_CASE("localization loss") {
  SUBCASE("inactive hinge gives zero loss and zero gradient") {
    const ModelParams p = random_everything(kSmall, 9);
    std::mt19937_64 rng(10);
    const Vec q = dft(oracle::random_vec(16, rng));
    const Vec n = dft(oracle::random_vec(16, rng));
    TripletSample s{feature_ref(q), {feature_ref(q)}, {feature_ref(n)}};
    const Descriptor fq = describe(p, encode_feature(p, q));
    const Descriptor fn = describe(p, encode_feature(p, n));
    const double dn = squared_euclidean(fq.values(), fn.values());
    REQUIRE(dn > 0.01);
    ModelParams g = ModelParams::zeros(kSmall);
    CHECK(loc_loss(p, s, dn * 0.9, &g) == 0.0);
    CHECK(g == ModelParams::zeros(kSmall));
  }

  SUBCASE("hand-evaluated hinge: d_pos^2 = 0.2, d_neg^2 = 0.3, margin 0.5 gives 0.4") {
    // Build a network mapping the three fixed inputs onto chosen unit codes.
    ModelParams p = ModelParams::zeros({4, 2, 2, 2});
    p.enc1.weight(0, 1) = 0.7;
    p.enc1.bias[0] = 0.3;
    p.enc1.weight(1, 2) = 1.1;
    p.enc1.bias[1] = -0.4;
    p.head.weight(0, 0) = 1.0;
    p.head.weight(1, 1) = 1.0;
    const double sp = std::sqrt(1.0 - 0.9 * 0.9);
    const double sn = std::sqrt(1.0 - 0.85 * 0.85);
    const std::array<Vec, 3> targets{Vec{1.0, 0.0}, Vec{0.9, sp}, Vec{0.85, -sn}};
    const std::array<Vec, 3> inputs{kSigA, kSigB, kSigC};
    // Hidden activations computed from the encoder definition with y in {-1, 0, 1}.
    std::array<std::array<double, 3>, 3> h{};
    const double ys[3][2] = {{-1.0, 1.0}, {0.0, 0.0}, {1.0, -1.0}};
    const double unit = 1.0 / std::sqrt(1.0 + 1e-8);
    for (int i = 0; i < 3; ++i)
      h[i] = {std::tanh(0.7 * ys[i][0] * unit + 0.3), std::tanh(1.1 * ys[i][1] * unit - 0.4), 1.0};
    for (int r = 0; r < 2; ++r) {
      const auto sol = solve3(h, {targets[0][r], targets[1][r], targets[2][r]});
      p.enc2.weight(r, 0) = sol[0];
      p.enc2.weight(r, 1) = sol[1];
      p.enc2.bias[r] = sol[2];
    }
    const Vec fa = dft(inputs[0]), fb = dft(inputs[1]), fc = dft(inputs[2]);
    TripletSample s{feature_ref(fa), {feature_ref(fb)}, {feature_ref(fc)}};
    CHECK(loc_loss(p, s, 0.5) == doctest::Approx(0.4).epsilon(1e-6));
  }

  SUBCASE("empty sets are rejected") {
    const ModelParams p = random_everything(kSmall, 11);
    const Vec q(9, 1.0);
    TripletSample s{feature_ref(q), {}, {feature_ref(q)}};
    CHECK_THROWS_AS(loc_loss(p, s, 0.5), Error);
  }
}

TEST_CASE("analytic gradients match central differences") {
  const double step = 1e-5;
  const double margin = 4.5;  // above the largest squared distance, keeping the hinge active
  for (std::uint64_t point = 0; point < 20; ++point) {
    CAPTURE(point);
    const ModelParams p = random_everything(kSmall, 100 + point);
    std::mt19937_64 rng(200 + point);
    const Vec q = dft(oracle::random_vec(16, rng));
    const Vec pos1 = dft(oracle::random_vec(16, rng));
    const Vec pos2 = dft(oracle::random_vec(16, rng));
    const Vec neg1 = dft(oracle::random_vec(16, rng));
    const Vec neg2 = dft(oracle::random_vec(16, rng));
    const Vec zq = oracle::random_vec(4, rng);
    const Vec zp = oracle::random_vec(4, rng);
    const Vec zn = oracle::random_vec(4, rng);

    SUBCASE("real triplet") {
      const TripletSample s{feature_ref(q), {feature_ref(pos1), feature_ref(pos2)},
                            {feature_ref(neg1), feature_ref(neg2)}};
      ModelParams g = ModelParams::zeros(kSmall);
      loc_loss(p, s, margin, &g);
      const Vec num = oracle::numeric_gradient(p, [&](const ModelParams& m) { return loc_loss(m, s, margin); }, step, {});
      CHECK(oracle::gradient_error(g.flatten(), num) < 1e-4);
    }
    SUBCASE("replayed triplet through the decoder") {
      const TripletSample s{latent_ref(zq), {latent_ref(zp)}, {latent_ref(zn), feature_ref(neg1)}};
      ModelParams g = ModelParams::zeros(kSmall);
      loc_loss(p, s, margin, &g);
      const Vec num = oracle::numeric_gradient(p, [&](const ModelParams& m) { return loc_loss(m, s, margin); }, step, {});
      CHECK(oracle::gradient_error(g.flatten(), num) < 1e-4);
    }
    SUBCASE("reconstruction") {
      const LatentCode z{zq};
      ModelParams g = ModelParams::zeros(kSmall);
      rec_loss(p, z, &g);
      const Vec num = oracle::numeric_gradient(p, [&](const ModelParams& m) { return rec_loss(m, z); }, step, {});
      CHECK(oracle::gradient_error(g.flatten(), num) < 1e-4);
    }
  }
}

TEST_CASE("reconstruction loss") {
  CHECK(rec_loss(ModelParams::zeros(kSmall), {Vec(4, 0.0)}) == 0.0);
  std::mt19937_64 rng(12);
  for (int i = 0; i < 50; ++i) {
    const ModelParams p = random_everything(kSmall, 300 + i);
    CHECK(rec_loss(p, {oracle::random_vec(4, rng)}) >= 0.0);
  }
}

TEST_CASE("joint loss step") {
  const ModelParams p0 = random_everything(kSmall, 13, 0.3);
  std::mt19937_64 rng(14);
  std::vector<Vec> feats;
  for (int i = 0; i < 6; ++i) feats.push_back(dft(oracle::random_vec(16, rng)));
  const std::vector<TripletSample> real{{feature_ref(feats[0]), {feature_ref(feats[1])}, {feature_ref(feats[2])}},
                                        {feature_ref(feats[3]), {feature_ref(feats[4])}, {feature_ref(feats[5])}}};
  const Vec z1 = oracle::random_vec(4, rng), z2 = oracle::random_vec(4, rng), z3 = oracle::random_vec(4, rng);
  const std::vector<TripletSample> replay{{latent_ref(z1), {latent_ref(z2)}, {latent_ref(z3)}}};
  const std::vector<LatentCode> codes{{z1}, {z2}};
  TrainerHyper hyper;
  hyper.margin = 1.0;

  SUBCASE("empty replay is the supervised step") {
    ModelParams a = p0;
    ModelParams grad = ModelParams::zeros(kSmall);
    double ref = 0.0;
    for (const auto& s : real) ref += loc_loss(p0, s, hyper.margin, &grad, 0.5) * 0.5;
    const JointLoss l = joint_loss_step(a, real, {}, {}, hyper);
    CHECK(l.loc_replay == 0.0);
    CHECK(l.rec == 0.0);
    CHECK(l.total == doctest::Approx(ref).epsilon(1e-14));
    ModelParams expect = p0;
    expect.axpy(-hyper.learning_rate, grad);
    CHECK(oracle::relative_l2(a.flatten(), expect.flatten()) < 1e-14);
  }

  SUBCASE("zero learning rate leaves params unchanged") {
    ModelParams a = p0;
    hyper.learning_rate = 0.0;
    joint_loss_step(a, real, replay, codes, hyper);
    CHECK(a == p0);
  }

  SUBCASE("terms add up") {
    const JointLoss l = joint_loss(p0, real, replay, codes, hyper.margin);
    const double rec = 0.5 * (rec_loss(p0, codes[0]) + rec_loss(p0, codes[1]));
    CHECK(l.rec == doctest::Approx(rec).epsilon(1e-14));
    CHECK(l.total == doctest::Approx(l.loc_real + l.loc_replay + l.rec).epsilon(1e-14));
    const double fd = oracle::directional_derivative(
        p0, [&](const ModelParams& m) { return joint_loss(m, real, replay, codes, hyper.margin).total; },
        oracle::random_vec(p0.parameter_count(), rng), 1e-6);
    CHECK(std::isfinite(fd));
  }

  SUBCASE("non-finite parameters are refused") {
    ModelParams a = p0;
    a.enc2.bias[0] = std::nan("");
    const ModelParams before = a;
    CHECK_THROWS_AS(joint_loss_step(a, real, replay, codes, hyper), Error);
    CHECK(a.flatten().size() == before.flatten().size());
    CHECK(std::isnan(a.enc2.bias[0]));
  }
}

TEST_CASE("training on a toy world lowers the loss on a fixed batch sequence") {
  WorldConfig wc;
  wc.domains = 1;
  wc.places = 40;
  wc.ring_width = 16;
  const World w = generate_world(wc, 15);
  std::vector<Vec> feats;
  std::vector<Pose> poses;
  for (std::size_t i = 0; i < wc.places; ++i) {
    feats.push_back(invariant_transform(render(w, 0, i, 900 + i).signal));
    poses.push_back(w.places[i].pose);
  }
  std::vector<std::vector<TripletSample>> batches;
  for (std::uint64_t b = 0; b < 200; ++b) {
    std::vector<TripletSample> batch;
    for (const auto& t : mine_triplets(poses, {}, TripletConfig{}, b)) {
      if (batch.size() == 8) break;
      TripletSample s{feature_ref(feats[t.query]), {}, {}};
      for (auto i : t.positives) s.positives.push_back(feature_ref(feats[i]));
      for (auto i : t.negatives) s.negatives.push_back(feature_ref(feats[i]));
      batch.push_back(std::move(s));
    }
    batches.push_back(std::move(batch));
  }
  const ModelParams p0 = ModelParams::random({16, 8, 4, 6}, 16);
  ModelParams p = p0;
  TrainerHyper hyper;
  hyper.learning_rate = 0.05;
  for (const auto& b : batches) joint_loss_step(p, b, {}, {}, hyper);
  double before = 0.0, after = 0.0;
  for (const auto& b : batches) {
    before += joint_loss(p0, b, {}, {}, hyper.margin).total;
    after += joint_loss(p, b, {}, {}, hyper.margin).total;
  }
  CHECK(after < before);
  std::mt19937_64 rng(17);
  for (int i = 0; i < 20; ++i)
    CHECK(std::abs(l2_norm(describe(p, {oracle::random_vec(4, rng)}).values()) - 1.0) < 1e-12);
}

TEST_CASE("reconstruction-only training lowers the error every epoch") {
  const ModelDims dims{16, 8, 4, 6};
  ModelParams p = ModelParams::random(dims, 18);
  std::mt19937_64 rng(19);
  std::vector<LatentCode> codes;
  for (int i = 0; i < 50; ++i) codes.push_back(encode(p, oracle::random_vec(16, rng)));
  TrainerHyper hyper;
  hyper.learning_rate = 0.02;
  double last = joint_loss(p, {}, {}, codes, hyper.margin).rec;
  for (int epoch = 0; epoch < 15; ++epoch) {
    joint_loss_step(p, {}, {}, codes, hyper);
    const double now = joint_loss(p, {}, {}, codes, hyper.margin).rec;
    CAPTURE(epoch);
    CHECK(now < last);
    last = now;
  }
}

TEST_CASE("parameter flattening round trip is exact") {
  const ModelParams p = ModelParams::random(ModelDims{}, 21);
  ModelParams q = ModelParams::zeros(ModelDims{});
  q.assign(p.flatten());
  CHECK(q == p);
  CHECK(p.flatten().size() == p.parameter_count());
}
