#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "vad/error.hpp"
#include "vad/scoring.hpp"

using namespace vad;

namespace {

ScoreRecord rec(const std::string& video, std::size_t start, std::size_t end, double mse) {
    ScoreRecord r;
    r.clip_id = video + "_" + std::to_string(start);
    r.video_id = video;
    r.frame_span = {start, end};
    r.mse = mse;
    return r;
}

}  // namespace

TEST_CASE("reconstruction error") {
    const std::vector<double> a{0, 0}, b{1, 1};
    CHECK(reconstruction_error(a, a) == 0.0);
    CHECK(reconstruction_error(a, b) == 1.0);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0, 1);
    std::vector<double> x(37), y(37);
    for (auto& v : x) v = n(rng);
    for (auto& v : y) v = n(rng);
    double s = 0;
    for (std::size_t i = 0; i < 37; ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
    CHECK(reconstruction_error(x, y) == doctest::Approx(s / 37).epsilon(1e-14));
    CHECK_THROWS_AS(reconstruction_error(a, std::vector<double>{1, 2, 3}), InvalidInput);
}

TEST_CASE("batch threshold fixed cases") {
    CHECK(batch_threshold(std::vector<double>{0, 2}, 0.0) == 1.0);
    CHECK(batch_threshold(std::vector<double>{3.5, 3.5, 3.5}, 2.7) == 3.5);
    CHECK(batch_threshold(std::vector<double>{1, 2, 3, 4}, 1.0) == 2.5 + std::sqrt(1.25));
    const auto st = batch_threshold_stats(std::vector<double>{1, 2, 3, 4}, 1.0);
    CHECK(st.mean == 2.5);
    CHECK(st.std == std::sqrt(1.25));
    CHECK_THROWS_AS(batch_threshold(std::vector<double>{}, 1.0), InvalidInput);
}

TEST_CASE("batch threshold is scale and shift equivariant") {
    std::mt19937_64 rng(2);
    std::exponential_distribution<double> e(1.0);
    std::vector<double> errs(500);
    for (auto& v : errs) v = e(rng);
    const double t = batch_threshold(errs, 1.3);
    std::vector<double> scaled = errs, shifted = errs;
    for (auto& v : scaled) v *= 4.0;
    for (auto& v : shifted) v += 2.5;
    CHECK(batch_threshold(scaled, 1.3) == doctest::Approx(4.0 * t).epsilon(1e-12));
    CHECK(batch_threshold(shifted, 1.3) == doctest::Approx(t + 2.5).epsilon(1e-12));
}

TEST_CASE("classify fixed cases") {
    CHECK(classify(std::vector<double>{0, 2}, 1.0) == std::vector<std::uint8_t>{0, 1});
    CHECK(classify(std::vector<double>{1.5, 1.5, 1.5}, 1.5) == std::vector<std::uint8_t>{0, 0, 0});

    std::vector<double> errs{0.2, 1.0, 3.0, 0.9999999999999, 1.0000000000001};
    const auto base = classify(errs, 1.0);
    CHECK(base == std::vector<std::uint8_t>{0, 0, 1, 0, 1});
    errs[0] = 50.0;
    const auto raised = classify(errs, 1.0);
    for (std::size_t i = 1; i < errs.size(); ++i) CHECK(raised[i] == base[i]);
    // sub-1e-12 perturbations that keep the sign of (error - threshold)
    for (auto& v : errs) v += (v > 1.0 ? 1e-13 : -1e-13);
    CHECK(classify(errs, 1.0) == raised);
}

TEST_CASE("threshold in batches uses each batch's statistics") {
    std::vector<ScoreRecord> rs;
    for (std::size_t i = 0; i < 10; ++i) rs.push_back(rec("v", 16 * i, 16 * i + 15, i < 5 ? double(i) : 100.0 + i));
    const auto stats = threshold_in_batches(rs, 0.0, 5);
    REQUIRE(stats.size() == 2);
    CHECK(stats[0].threshold == 2.0);
    CHECK(stats[1].threshold == 107.0);
    const std::vector<std::uint8_t> expect{0, 0, 0, 1, 1, 0, 0, 0, 1, 1};
    for (std::size_t i = 0; i < 10; ++i) CHECK(*rs[i].label_pred == expect[i]);
    const auto tail = threshold_in_batches(rs, 0.0, 4);
    REQUIRE(tail.size() == 3);
    CHECK(tail[2].mean == 108.5);
}

TEST_CASE("frame broadcast") {
    const std::map<std::string, std::size_t> lengths{{"a", 32}, {"b", 35}};
    std::vector<ScoreRecord> rs{rec("a", 0, 15, 1.0), rec("a", 16, 31, 2.0), rec("b", 0, 15, 3.0),
                                rec("b", 16, 31, 4.0)};
    const auto fs = frame_scores(rs, lengths);
    REQUIRE(fs.at("a").scores.size() == 32);
    REQUIRE(fs.at("b").scores.size() == 35);
    for (std::size_t k = 0; k < 16; ++k) CHECK(fs.at("a").scores[k] == 1.0);
    for (std::size_t k = 16; k < 32; ++k) CHECK(fs.at("a").scores[k] == 2.0);
    for (std::size_t k = 32; k < 35; ++k) CHECK(fs.at("b").scores[k] == 4.0);
    CHECK(fs.at("a").predicted.empty());

    auto shuffled = rs;
    std::reverse(shuffled.begin(), shuffled.end());
    std::swap(shuffled[0], shuffled[2]);
    const auto again = frame_scores(shuffled, lengths);
    CHECK(again.at("a").scores == fs.at("a").scores);
    CHECK(again.at("b").scores == fs.at("b").scores);

    for (auto& r : rs) r.label_pred = r.mse > 2.5 ? 1 : 0;
    const auto labelled = frame_scores(rs, lengths);
    CHECK(labelled.at("b").predicted.size() == 35);
    CHECK(labelled.at("a").predicted[20] == 0);
    CHECK(labelled.at("b").predicted[0] == 1);

    std::size_t total = 0;
    for (const auto& [v, s] : labelled) total += s.scores.size();
    CHECK(total == 67);

    rs.push_back(rec("a", 10, 25, 9.0));
    CHECK_THROWS_AS(frame_scores(rs, lengths), InvalidInput);
    CHECK_THROWS_AS(frame_scores(std::vector<ScoreRecord>{rec("zzz", 0, 15, 1.0)}, lengths), InvalidInput);
}

TEST_CASE("AUC fixed cases") {
    CHECK(roc_auc(std::vector<double>{0.9, 0.1}, std::vector<std::uint8_t>{1, 0}) == 1.0);
    CHECK(roc_auc(std::vector<double>{0.3, 0.3, 0.3, 0.3}, std::vector<std::uint8_t>{1, 0, 0, 1}) == 0.5);
    CHECK(roc_auc(std::vector<double>{0.1, 0.9}, std::vector<std::uint8_t>{1, 0}) == 0.0);
    CHECK_THROWS_AS(roc_auc(std::vector<double>{1, 2}, std::vector<std::uint8_t>{1, 1}), InvalidInput);
}

TEST_CASE("AUC equals the pair-counting oracle") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 20 + rng() % 200;
        std::vector<double> s(n);
        std::vector<std::uint8_t> l(n);
        std::uniform_int_distribution<int> coarse(0, 9);  // frequent ties
        std::normal_distribution<double> fine(0.0, 1.0);
        for (std::size_t i = 0; i < n; ++i) {
            l[i] = (rng() % 4 == 0) ? 1 : 0;
            s[i] = trial % 2 ? coarse(rng) + 0.5 * l[i] : fine(rng) + 0.7 * l[i];
        }
        l[0] = 1;
        l[1] = 0;
        CHECK(std::fabs(roc_auc(s, l) - testing::pair_auc_oracle(s, l)) < 1e-12);
    }
}

TEST_CASE("AUC invariances") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> s(300);
    std::vector<std::uint8_t> l(300);
    for (std::size_t i = 0; i < 300; ++i) {
        l[i] = i % 3 == 0;
        s[i] = n(rng) + 0.8 * l[i];
    }
    const double auc = roc_auc(s, l);
    std::vector<double> ex = s, aff = s, neg = s;
    for (auto& v : ex) v = std::exp(v);
    for (auto& v : aff) v = 3.0 * v - 7.0;
    for (auto& v : neg) v = -v;
    CHECK(std::fabs(roc_auc(ex, l) - auc) < 1e-12);
    CHECK(std::fabs(roc_auc(aff, l) - auc) < 1e-12);
    CHECK(std::fabs(roc_auc(neg, l) + auc - 1.0) < 1e-12);

    // trapezoidal area under the ROC curve
    const auto curve = roc_curve(s, l);
    CHECK(curve.front().fpr == 0.0);
    CHECK(curve.front().tpr == 0.0);
    CHECK(curve.back().fpr == 1.0);
    CHECK(curve.back().tpr == 1.0);
    double area = 0;
    for (std::size_t i = 1; i < curve.size(); ++i) {
        area += (curve[i].fpr - curve[i - 1].fpr) * (curve[i].tpr + curve[i - 1].tpr) / 2;
    }
    CHECK(std::fabs(area - auc) < 1e-12);
}

TEST_CASE("score CSV round-trip") {
    const auto dir = testing::temp_dir("csv");
    std::vector<ScoreRecord> rs{rec("v0", 0, 15, 0.125), rec("v0", 16, 31, 1.0 / 3.0), rec("v1", 0, 15, 7e-9)};
    rs[0].label_pred = 1;
    rs[0].label_true = 0;
    rs[2].label_true = 1;
    write_score_csv(dir / "s.csv", rs);
    const auto text = testing::read_bytes(dir / "s.csv");
    const std::string head(text.begin(), std::find(text.begin(), text.end(), '\n'));
    CHECK(head == "clip_id,video_id,start_frame,end_frame,mse,label_pred,label_true");
    const auto back = read_score_csv(dir / "s.csv");
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back[i].clip_id == rs[i].clip_id);
        CHECK(back[i].video_id == rs[i].video_id);
        CHECK(back[i].frame_span == rs[i].frame_span);
        CHECK(back[i].mse == rs[i].mse);
        CHECK(back[i].label_pred == rs[i].label_pred);
        CHECK(back[i].label_true == rs[i].label_true);
    }
    testing::write_bytes(dir / "bad.csv", {'x', '\n'});
    CHECK_THROWS_AS(read_score_csv(dir / "bad.csv"), DataError);
}
