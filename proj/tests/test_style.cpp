#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "gradcheck.hpp"
#include "support.hpp"
#include "thermoscope/error.hpp"
#include "thermoscope/nn/kernels.hpp"
#include "thermoscope/style/features.hpp"
#include "thermoscope/style/generator.hpp"
#include "thermoscope/style/loss_network.hpp"
#include "thermoscope/style/losses.hpp"
#include "thermoscope/style/objective.hpp"

using namespace thermoscope;
using namespace thermoscope::style;

namespace {

FeatureMap fmap(Tensor t, int scale = 1) { return FeatureMap{std::move(t), scale}; }

const LossNetwork& net() {
    static const LossNetwork n = LossNetwork::random();
    return n;
}

}  // namespace

TEST_CASE("gram examples") {
    const GramMatrix z = gram(fmap(Tensor::chw(4, 3, 3)));
    CHECK(z.values.rows() == 4);
    CHECK(z.values.isZero(0.0));

    const Tensor f({2, 1, 2}, std::vector<double>{1, -1, 2, -2});
    const GramMatrix g = gram(fmap(f));
    CHECK(g.normalization == 4.0);
    CHECK(g.values(0, 0) == doctest::Approx(0.5));
    CHECK(g.values(0, 1) == doctest::Approx(1.0));
    CHECK(g.values(1, 0) == doctest::Approx(1.0));
    CHECK(g.values(1, 1) == doctest::Approx(2.0));

    Tensor bad = Tensor::chw(2, 2, 2);
    bad[3] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(gram(fmap(bad)), NumericError);
}

TEST_CASE("gram matches the double loop, is symmetric and PSD") {
    Rng rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        const int c = 1 + int(uniform_index(rng, 8)), h = 1 + int(uniform_index(rng, 8)),
                  w = 1 + int(uniform_index(rng, 8));
        const Tensor f = tstest::random_tensor({c, h, w}, rng);
        const GramMatrix g = gram(fmap(f));
        const auto oracle = tstest::gram_oracle(f);
        for (int a = 0; a < c; ++a)
            for (int b = 0; b < c; ++b) {
                CHECK(g.values(a, b) == doctest::Approx(oracle[a][b]).epsilon(1e-6));
                CHECK(tstest::rel_err(g.values(a, b), g.values(b, a)) <= 1e-6);
            }
        Eigen::SelfAdjointEigenSolver<Matrix> es(g.values);
        CHECK(es.eigenvalues().minCoeff() >= -1e-6 * std::max(1e-300, es.eigenvalues().maxCoeff()));
    }
}

TEST_CASE("phi round trip") {
    Rng rng(2);
    const FeatureMap f = fmap(tstest::random_tensor({3, 4, 5}, rng), 2);
    const FeatureMap back = phi_inverse(phi(f), 4, 5, 2);
    CHECK(back.values == f.values);
    CHECK_THROWS_AS(phi_inverse(phi(f), 3, 3), DimensionError);
}

TEST_CASE("comatch identities and scalar oracle") {
    Rng rng(4);
    const FeatureMap f = fmap(tstest::random_tensor({8, 16, 16}, rng));
    GramMatrix eye{Matrix::Identity(8, 8), 1, 1.0};
    const FeatureMap same = comatch(f, eye, CoMatchWeights{Matrix::Identity(8, 8)});
    CHECK(same.values == f.values);

    GramMatrix g{Matrix::Random(8, 8), 1, 1.0};
    CoMatchWeights w{Matrix::Random(8, 8)};
    CHECK(comatch(f, g, w).values.shape() == f.values.shape());
    const FeatureMap once = comatch(f, g, w);
    const FeatureMap scaled_w = comatch(f, g, CoMatchWeights{2.5 * w.W});
    for (std::size_t i = 0; i < once.values.size(); ++i)
        CHECK(scaled_w.values[i] == doctest::Approx(2.5 * once.values[i]).epsilon(1e-12));

    const FeatureMap one = fmap(tstest::random_tensor({1, 3, 4}, rng));
    const FeatureMap y = comatch(one, GramMatrix{Matrix::Constant(1, 1, 0.7), 1, 1.0},
                                 CoMatchWeights{Matrix::Constant(1, 1, -1.3)});
    for (std::size_t i = 0; i < y.values.size(); ++i) CHECK(y.values[i] == doctest::Approx(one.values[i] * -1.3 * 0.7));

    CHECK_THROWS_AS(comatch(f, GramMatrix{Matrix::Identity(4, 4), 1, 1.0}, w), DimensionError);
}

TEST_CASE("loss examples") {
    const FeatureMap ones = fmap(Tensor::chw(2, 2, 2, 1.0));
    const FeatureMap zeros = fmap(Tensor::chw(2, 2, 2, 0.0));
    CHECK(content_loss(ones, zeros) == 8.0);
    CHECK(content_loss(ones, ones) == 0.0);
    Rng rng(8);
    const FeatureMap f = fmap(tstest::random_tensor({3, 4, 4}, rng));
    CHECK(content_loss(fmap(scaled(f.values, 3.0)), fmap(Tensor::chw(3, 4, 4))) ==
          doctest::Approx(9.0 * content_loss(f, fmap(Tensor::chw(3, 4, 4)))));
    CHECK_THROWS_AS(content_loss(ones, fmap(Tensor::chw(2, 2, 3))), DimensionError);

    // Single scale, Gram difference equal to I2.
    FeaturePyramid p;
    p.maps = {fmap(Tensor({2, 1, 2}, std::vector<double>{1, -1, 2, -2}))};
    GramMatrix target = gram(p.maps[0]);
    target.values -= Matrix::Identity(2, 2);
    CHECK(style_loss(p, {target}) == doctest::Approx(2.0));
    CHECK(style_loss(p, {gram(p.maps[0])}) == 0.0);
    CHECK_THROWS_AS(style_loss(p, {target, target}), DimensionError);

    const Tensor img({1, 2, 2}, std::vector<double>{0, 1, 0, 1});
    CHECK(tv_loss(img) == 2.0);
    CHECK(tv_loss(Tensor::chw(3, 5, 5, 0.3)) == 0.0);
    CHECK_THROWS_AS(tv_loss(Tensor::chw(3, 1, 1)), DimensionError);

    const LossWeights w{1.0, 5.0, 1e-6};
    CHECK(weighted_total(w, 2.0, 0.5, 1000.0) == doctest::Approx(4.501).epsilon(1e-12));
    CHECK(weighted_total({0, 0, 0}, 2.0, 0.5, 1000.0) == 0.0);
    CHECK_THROWS_AS(check_loss_weights({-1, 0, 0}), ConfigError);
}

TEST_CASE("losses are non-negative on random inputs") {
    Rng rng(12);
    for (int i = 0; i < 20; ++i) {
        const FeatureMap a = fmap(tstest::random_tensor({3, 3, 3}, rng));
        const FeatureMap b = fmap(tstest::random_tensor({3, 3, 3}, rng));
        CHECK(content_loss(a, b) >= 0);
        FeaturePyramid p;
        p.maps = {a};
        CHECK(style_loss(p, {gram(b)}) >= 0);
        CHECK(tv_loss(tstest::random_image(4, 4, rng)) >= 0);
    }
}

TEST_CASE("feature-level loss gradients match finite differences") {
    Rng rng(31);
    const double h = 1e-3;
    for (int trial = 0; trial < 3; ++trial) {
        const FeatureMap a = fmap(tstest::random_tensor({3, 4, 5}, rng));
        const FeatureMap b = fmap(tstest::random_tensor({3, 4, 5}, rng));
        const Tensor gc = content_loss_gradient(a, b);
        FeaturePyramid p;
        p.maps = {a};
        const std::vector<GramMatrix> target{gram(b)};
        const Tensor gs = style_loss_gradient(p, target)[0];
        const Image img = tstest::random_image(8, 8, rng);
        const Tensor gt = tv_loss_gradient(img);
        std::vector<double> an_c, nu_c, an_s, nu_s, an_t, nu_t;
        for (std::size_t i = 0; i < a.values.size(); ++i) {
            FeatureMap ap = a, am = a;
            ap.values[i] += h;
            am.values[i] -= h;
            an_c.push_back(gc[i]);
            nu_c.push_back((content_loss(ap, b) - content_loss(am, b)) / (2 * h));
            FeaturePyramid pp, pm;
            pp.maps = {ap};
            pm.maps = {am};
            an_s.push_back(gs[i]);
            nu_s.push_back((style_loss(pp, target) - style_loss(pm, target)) / (2 * h));
        }
        for (std::size_t i = 0; i < img.size(); ++i) {
            Image ip = img, im = img;
            ip[i] += h;
            im[i] -= h;
            an_t.push_back(gt[i]);
            nu_t.push_back((tv_loss(ip) - tv_loss(im)) / (2 * h));
        }
        CHECK(tstest::compare_gradients(an_c, nu_c, 1e-4).failed == 0);
        CHECK(tstest::compare_gradients(an_s, nu_s, 1e-3).failed == 0);
        CHECK(tstest::compare_gradients(an_t, nu_t, 1e-4).failed == 0);
    }
}

TEST_CASE("loss network pyramid shapes") {
    Rng rng(5);
    const FeaturePyramid p = net().extract(tstest::random_image(32, 48, rng));
    REQUIRE(p.maps.size() == 4);
    const int channels[] = {64, 128, 256, 512};
    const int scale[] = {1, 2, 4, 8};
    for (int j = 0; j < 4; ++j) {
        CHECK(p.maps[j].channels() == channels[j]);
        CHECK(p.maps[j].values.height() == 32 / scale[j]);
        CHECK(p.maps[j].values.width() == 48 / scale[j]);
        CHECK(p.maps[j].scale_index == j + 1);
    }
    CHECK(p.content_scale == 3);
    const Image img = tstest::random_image(24, 24, rng);
    CHECK(net().extract(img).maps[3].values == net().extract(img).maps[3].values);
    CHECK_THROWS_AS(net().extract(tstest::random_image(8, 8, rng)), DimensionError);
    CHECK_THROWS_AS(net().extract(Tensor::chw(1, 32, 32)), DimensionError);
}

TEST_CASE("loss network checkpoint round trip") {
    tstest::TempDir dir("vgg");
    net().save(dir / "vgg.tsck");
    const LossNetwork back = LossNetwork::load(dir / "vgg.tsck");
    CHECK(back.pretrained() == net().pretrained());
    Rng rng(6);
    const Image img = tstest::random_image(16, 16, rng);
    CHECK(back.extract(img).maps[2].values == net().extract(img).maps[2].values);
}

TEST_CASE("style targets are symmetric PSD Grams") {
    Rng rng(7);
    for (int i = 0; i < 20; ++i) {
        const StyleTargets t = set_style_targets(tstest::random_image(16, 16, rng), net());
        REQUIRE(t.grams.size() == 4);
        for (const auto& g : t.grams) {
            CHECK((g.values - g.values.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * (1 + g.values.cwiseAbs().maxCoeff()));
            Eigen::SelfAdjointEigenSolver<Matrix> es(g.values);
            CHECK(es.eigenvalues().minCoeff() >= -1e-6 * std::max(1e-300, es.eigenvalues().maxCoeff()));
        }
        CHECK_FALSE(t.comatch_target.has_value());
    }
    const Image s = tstest::random_image(16, 16, rng);
    const auto a = set_style_targets(s, net());
    const auto b = set_style_targets(s, net());
    for (int j = 0; j < 4; ++j) CHECK(a.grams[j].values == b.grams[j].values);
}

TEST_CASE("generator forward contract") {
    Rng rng(9);
    GeneratorArch arch;
    arch.channels = 4;
    arch.residual_blocks = 1;
    const Generator gen = Generator::create(arch, 1);
    const Image style_image = tstest::random_image(20, 20, rng);
    const StyleTargets targets = set_style_targets(style_image, net(), gen);
    REQUIRE(targets.comatch_target.has_value());
    const Image content = tstest::random_image(18, 23, rng);
    const Image out = generator_forward(content, gen, targets);
    CHECK(out.shape() == std::vector<int>{3, 18, 23});
    CHECK(out.all_finite());
    for (double v : out.values()) CHECK((v >= 0 && v <= 1));
    CHECK(generator_forward(content, gen, targets) == out);

    CHECK_THROWS_AS(generator_forward(content, gen, set_style_targets(style_image, net())), StateError);
    GeneratorArch other = arch;
    other.channels = 8;
    CHECK_THROWS_AS(generator_forward(content, Generator::create(other, 1), targets), DimensionError);
    CHECK(Generator::create(arch, 1).parameters()[0].value == gen.parameters()[0].value);
}

TEST_CASE("default generator size") {
    const Generator gen = Generator::create(GeneratorArch{}, 0);
    const std::size_t n = nn::parameter_count(gen.parameters());
    CHECK(n > 300000);
    CHECK(n < 600000);
}

TEST_CASE("image-level gradients of each term match finite differences") {
    Rng rng(13);
    const Image x = tstest::random_image(16, 16, rng);
    tstest::ImageObjective obj{&net(), net().extract(tstest::random_image(16, 16, rng)).content(),
                               set_style_targets(tstest::random_image(16, 16, rng), net()).grams};
    for (auto t : {tstest::Term::content, tstest::Term::style, tstest::Term::tv}) {
        CAPTURE(tstest::term_name(t));
        const auto r = tstest::check_image_term(obj, t, x, 6, rng, 1e-6, 1e-3);
        CAPTURE(r.worst);
        CHECK(r.failed == 0);
    }
}

TEST_CASE("total objective gradient over a parameter slice") {
    Rng rng(14);
    GeneratorArch arch;
    arch.channels = 4;
    arch.residual_blocks = 1;
    Generator gen = Generator::create(arch, 3);
    const Image content = tstest::random_image(16, 16, rng);
    const StyleTargets targets = set_style_targets(tstest::random_image(16, 16, rng), net(), gen);
    const auto r = tstest::check_total_objective(gen, net(), content, targets, LossWeights{}, 10, 1e-6, 1e-3);
    CAPTURE(r.worst);
    CHECK(r.failed == 0);
}

TEST_CASE("objective terms and weights") {
    Rng rng(15);
    GeneratorArch arch;
    arch.channels = 4;
    arch.residual_blocks = 1;
    const Generator gen = Generator::create(arch, 3);
    const Image c = tstest::random_image(16, 16, rng);
    const Image s = tstest::random_image(16, 16, rng);
    const ObjectiveTerms t = total_objective(c, s, gen, LossWeights{1, 5, 1e-6}, net());
    CHECK(t.total == doctest::Approx(t.content + 5 * t.style + 1e-6 * t.tv).epsilon(1e-12));
    CHECK(t.content > 0);
    CHECK(total_objective(c, s, gen, LossWeights{0, 0, 0}, net()).total == 0.0);
}
