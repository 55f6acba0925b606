#include <doctest.h>

#include <cmath>

#include "advforge/common.hpp"
#include "advforge/losses.hpp"
#include "advforge/rng.hpp"

using namespace advforge;
using filters::FilterOutput;
using losses::LossResult;
using losses::Vector;

namespace {

FilterOutput make_rows(const std::vector<double>& p,
                       const std::vector<std::vector<double>>& v) {
    FilterOutput f;
    f.P = p;
    f.V = v;
    for (int i = 0; i < int(p.size()); ++i) f.indices.push_back(i);
    return f;
}

FilterOutput random_rows(Rng& rng, int k, int classes) {
    FilterOutput f;
    for (int j = 0; j < k; ++j) {
        f.P.push_back(rng.uniform(0.1, 0.9));
        std::vector<double> row(static_cast<size_t>(classes));
        for (double& x : row) x = rng.uniform(0.1, 0.9);
        f.V.push_back(std::move(row));
        f.indices.push_back(j);
    }
    return f;
}

// Central-difference check of d_p and d_v for one loss functional.
template <typename LossFn>
void check_gradients(LossFn&& fn, const FilterOutput& f) {
    const LossResult base = fn(f);
    const double h = 1e-7;
    for (int j = 0; j < f.k(); ++j) {
        {
            FilterOutput fp = f, fm = f;
            fp.P[size_t(j)] += h;
            fm.P[size_t(j)] -= h;
            const double fd = (fn(fp).value - fn(fm).value) / (2.0 * h);
            CHECK(fd == doctest::Approx(base.d_p[size_t(j)]).epsilon(1e-5));
        }
        for (int z = 0; z < int(f.V[size_t(j)].size()); ++z) {
            FilterOutput fp = f, fm = f;
            fp.V[size_t(j)][size_t(z)] += h;
            fm.V[size_t(j)][size_t(z)] -= h;
            const double fd = (fn(fp).value - fn(fm).value) / (2.0 * h);
            CHECK(fd == doctest::Approx(base.d_v[size_t(j)][size_t(z)])
                            .epsilon(1e-5)
                            .scale(1.0));
        }
    }
}

} // namespace

TEST_CASE("frozen loss values") {
    // Hiding at P=0.5 with c=100: 100 * 1/(1-0.5) = 200.
    const FilterOutput ha = make_rows({0.5}, {{0.2, 0.3}});
    CHECK(losses::loss_hiding(ha, 100.0, 0.0).value == doctest::Approx(200.0).epsilon(1e-9));
    // Appearance at P=0.5, V[target]=0.5 with c=1: 1/(0.25) = 4.
    const FilterOutput aa = make_rows({0.5}, {{0.2, 0.5}});
    CHECK(losses::loss_appearance(aa, 1.0, 1).value == doctest::Approx(4.0).epsilon(1e-9));
    // Non-target at P=0.5, V[source]=0.5 with c=1: 2 + 2 = 4.
    const FilterOutput nta = make_rows({0.5}, {{0.5, 0.1}});
    CHECK(losses::loss_nontarget(nta, 1.0, 0, 0.0).value == doctest::Approx(4.0).epsilon(1e-9));
    // Target with P=1, V=(0,1,0), source 0, target 1: 1 + 1 + 1 = 3 up to the
    // probability clamp.
    const FilterOutput ta = make_rows({1.0}, {{0.0, 1.0, 0.0}});
    CHECK(losses::loss_target(ta, 1.0, 0, 1, 0.0).value == doctest::Approx(3.0).epsilon(1e-4));
}

TEST_CASE("literal suppression also pushes down the source class") {
    const FilterOutput f = make_rows({0.5}, {{0.5, 0.5, 0.5}});
    const double relaxed = losses::loss_target(f, 1.0, 0, 1, 0.0, false).value;
    const double literal = losses::loss_target(f, 1.0, 0, 1, 0.0, true).value;
    // The literal form adds 1/(1 - V[source]) = 2.
    CHECK(literal - relaxed == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("losses scale linearly in c") {
    Rng rng(7);
    const FilterOutput f = random_rows(rng, 4, 5);
    const double a = losses::loss_hiding(f, 10.0, 0.0).value;
    const double b = losses::loss_hiding(f, 20.0, 0.0).value;
    CHECK(b == doctest::Approx(2.0 * a).epsilon(1e-12));
    const double l2 = 0.625;
    CHECK(losses::loss_hiding(f, 10.0, l2).value == doctest::Approx(a + l2).epsilon(1e-12));
}

TEST_CASE("row count normalization keeps duplicated rows at the same value") {
    const FilterOutput one = make_rows({0.4}, {{0.3, 0.6}});
    const FilterOutput two = make_rows({0.4, 0.4}, {{0.3, 0.6}, {0.3, 0.6}});
    CHECK(losses::loss_hiding(two, 50.0, 0.0).value ==
          doctest::Approx(losses::loss_hiding(one, 50.0, 0.0).value).epsilon(1e-12));
}

TEST_CASE("analytic gradients match finite differences") {
    Rng rng(23);
    const FilterOutput f = random_rows(rng, 3, 4);
    check_gradients([](const FilterOutput& x) { return losses::loss_hiding(x, 7.0, 0.0); }, f);
    check_gradients([](const FilterOutput& x) { return losses::loss_appearance(x, 7.0, 2); }, f);
    check_gradients([](const FilterOutput& x) { return losses::loss_nontarget(x, 7.0, 1, 0.0); },
                    f);
    check_gradients(
        [](const FilterOutput& x) { return losses::loss_target(x, 7.0, 1, 3, 0.0); }, f);
    check_gradients(
        [](const FilterOutput& x) { return losses::loss_target(x, 7.0, 1, 3, 0.0, true); }, f);
}

TEST_CASE("clamped probabilities keep the value finite and the gradient flat") {
    const FilterOutput f = make_rows({1e-9}, {{0.5, 0.5}});
    const LossResult r = losses::loss_nontarget(f, 1.0, 0, 0.0);
    CHECK(std::isfinite(r.value));
    CHECK(r.value == doctest::Approx(1e6 + 2.0).epsilon(1e-6));
    CHECK(r.d_p[0] == 0.0); // clamp active: derivative gated off
    const FilterOutput g = make_rows({0.5}, {{1.0 - 1e-9, 0.5}});
    const LossResult s = losses::loss_nontarget(g, 1.0, 0, 0.0);
    CHECK(std::isfinite(s.value));
    CHECK(s.d_v[0][0] == 0.0);
}

TEST_CASE("label validation names the offending field") {
    const FilterOutput f = make_rows({0.5}, {{0.5, 0.5}});
    auto message_of = [](auto&& fn) -> std::string {
        try {
            fn();
        } catch (const InvalidInput& e) {
            return e.what();
        }
        return "";
    };
    CHECK(message_of([&] { losses::loss_appearance(f, 1.0, 9); }).find("target_label") !=
          std::string::npos);
    CHECK(message_of([&] { losses::loss_nontarget(f, 1.0, -1, 0.0); }).find("source_label") !=
          std::string::npos);
    CHECK_THROWS_AS(losses::loss_target(f, 1.0, 1, 1, 0.0), InvalidInput);
    const FilterOutput empty;
    CHECK_THROWS_AS(losses::loss_hiding(empty, 1.0, 0.0), InvalidInput);
}

TEST_CASE("vector names round trip") {
    for (Vector v : {Vector::HA, Vector::AA, Vector::NTA, Vector::TA})
        CHECK(losses::vector_from_name(losses::vector_name(v)) == v);
    CHECK_THROWS_AS(losses::vector_from_name("xx"), InvalidInput);
}

TEST_CASE("masked perturbation norm hand value") {
    imaging::Image x(16, 16, 0.25);
    imaging::Image adv(16, 16, 0.25);
    for (int c = 0; c < 3; ++c) adv.at(c, 3, 4) = 0.75;
    imaging::Mask mask(16, 16, 0);
    mask.at(3, 4) = 1;
    CHECK(losses::l2_distance(x, adv, mask) == doctest::Approx(0.75).epsilon(1e-12));
    // Pixels outside the mask do not count.
    adv.at(0, 8, 8) = 1.0;
    CHECK(losses::l2_distance(x, adv, mask) == doctest::Approx(0.75).epsilon(1e-12));
    const imaging::Image g = losses::l2_distance_grad(x, adv, mask);
    CHECK(g.at(0, 3, 4) == doctest::Approx(1.0).epsilon(1e-12)); // 2 * 0.5
    CHECK(g.at(0, 8, 8) == 0.0);
}
