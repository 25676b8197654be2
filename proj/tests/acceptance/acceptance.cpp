// Acceptance checks. Prints one PASS/FAIL line per criterion; exits non-zero
// when a criterion fails that was not listed with --known-failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iterator>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "marior/errors.hpp"
#include "marior/geometry.hpp"
#include "marior/icrm.hpp"
#include "marior/losses.hpp"
#include "marior/metrics.hpp"
#include "marior/mrm.hpp"
#include "marior/rng.hpp"
#include "marior/synth.hpp"
#include "marior/warpfield.hpp"

using namespace marior;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Raster random_raster(int w, int h, int c, std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<float> data(static_cast<std::size_t>(w) * h * c);
    for (float& v : data) v = static_cast<float>(rng.uniform());
    return Raster::from_data(w, h, c, std::move(data));
}

DisplacementFlow random_flow(int w, int h, double amplitude, std::uint64_t seed) {
    SplitMix64 rng(seed);
    DisplacementFlow f(w, h);
    for (auto& v : f.vectors()) v = {rng.uniform(-amplitude, amplitude), rng.uniform(-amplitude, amplitude)};
    return f;
}

double max_abs_diff(const DisplacementFlow& a, const DisplacementFlow& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.vectors().size(); ++i)
        worst = std::max({worst, std::abs(a.vectors()[i].du - b.vectors()[i].du), std::abs(a.vectors()[i].dv - b.vectors()[i].dv)});
    return worst;
}

class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("marior-acceptance-" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

std::vector<char> read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome tps_exactness() {
    SplitMix64 rng(101);
    double worst = 0.0;
    const auto t0 = std::chrono::steady_clock::now();
    for (int trial = 0; trial < 200; ++trial) {
        const int n = rng.uniform_int(8, 24);
        std::vector<Point2> src, dst;
        while (static_cast<int>(src.size()) < n) {
            const Point2 p{rng.uniform(0.0, 500.0), rng.uniform(0.0, 500.0)};
            if (std::all_of(src.begin(), src.end(), [&](Point2 q) { return distance(p, q) >= 5.0; })) {
                src.push_back(p);
                dst.push_back({p.x + rng.uniform(-30.0, 30.0), p.y + rng.uniform(-30.0, 30.0)});
            }
        }
        const TpsTransform t = tps_fit(src, dst, 0.0);
        for (int i = 0; i < n; ++i) worst = std::max(worst, distance(t.apply(src[i]), dst[i]));
    }
    const double elapsed = seconds_since(t0);
    return {worst <= 1e-6 && elapsed < 1.0, fmt("max residual %.3g px, %.3f s", worst, elapsed)};
}

Outcome sampling_identity() {
    int identical = 0;
    for (int i = 0; i < 20; ++i) {
        SplitMix64 rng(200 + i);
        const Raster img = random_raster(rng.uniform_int(1, 120), rng.uniform_int(1, 120), i % 2 ? 3 : 1, 300 + i);
        identical += sample(img, DisplacementFlow(img.width(), img.height())) == img;
    }
    return {identical == 20, fmt("%d/20 bit-identical", identical)};
}

Outcome shift_invariant_identity() {
    double worst_rel = 0.0, worst_shift = 0.0;
    SplitMix64 rng(3);
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const DisplacementFlow p = random_flow(8, 8, 5.0, seed), g = random_flow(8, 8, 5.0, seed + 1000);
        const auto& pv = p.vectors();
        const auto& gv = g.vectors();
        double sum = 0.0;
        for (std::size_t i = 0; i < pv.size(); ++i)
            for (std::size_t j = 0; j < pv.size(); ++j) {
                const double du = (gv[i].du - gv[j].du) - (pv[i].du - pv[j].du);
                const double dv = (gv[i].dv - gv[j].dv) - (pv[i].dv - pv[j].dv);
                sum += du * du + dv * dv;
            }
        const double brute = sum / (2.0 * 64.0 * 64.0);
        const double closed = shift_invariant_loss(p, g);
        worst_rel = std::max(worst_rel, std::abs(closed - brute) / brute);

        const FlowVector c{rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0)};
        DisplacementFlow shifted = p;
        for (FlowVector& v : shifted.vectors()) v = {v.du + c.du, v.dv + c.dv};
        worst_shift = std::max(worst_shift, std::abs(shift_invariant_loss(shifted, p)));
    }
    return {worst_rel <= 1e-9 && worst_shift <= 1e-12,
            fmt("max relative error %.3g, max offset loss %.3g", worst_rel, worst_shift)};
}

Outcome content_aware() {
    const double hand = content_aware_loss(DisplacementFlow(1, 1), DisplacementFlow(1, 1, {3, 4}), SoftMask(1, 1, 1.0), 3.0);
    const DisplacementFlow g = random_flow(6, 6, 3.0, 7);
    const double zero = content_aware_loss(g, g, SoftMask(6, 6, 1.0), 3.0);
    SplitMix64 rng(8);
    int monotone = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const DisplacementFlow p = random_flow(5, 5, 2.0, 500 + trial), q = random_flow(5, 5, 2.0, 700 + trial);
        std::vector<double> m(25);
        for (double& v : m) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
        const SoftMask mask = SoftMask::from_values(5, 5, m);
        const double b0 = rng.uniform(0.0, 5.0), b1 = b0 + rng.uniform(0.0, 5.0);
        monotone += content_aware_loss(p, q, mask, b1) >= content_aware_loss(p, q, mask, b0);
    }
    return {hand == 20.0 && zero == 0.0 && monotone == 50,
            fmt("hand case %.17g, pred==gt %.3g, monotone %d/50", hand, zero, monotone)};
}

Outcome relabel_grid() {
    int matches = 0, total = 0;
    for (int g = 0; g <= 1; ++g)
        for (int i = 0; i <= 20; ++i) {
            const double p = std::min(i * 0.05, 1.0);
            const double out = prior_relabel(SoftMask(1, 1, g), SoftMask::from_values(1, 1, {p})).at(0, 0);
            matches += out == (g == 1 ? std::max(0.9, p) : std::min(0.1, p));
            ++total;
        }
    return {matches == total, fmt("%d/%d grid points", matches, total)};
}

Outcome oracle_contraction() {
    double worst = 0.0;
    int samples = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        SynthOptions o;
        o.curl_amplitude = 0.6 * static_cast<double>(seed);
        const SynthSample s = make_sample(seed, o);
        const MrmOutcome m = margin_removal(s.distorted, s.doc_mask);
        if (!m.grid) return {false, fmt("seed %d: margin removal skipped", static_cast<int>(seed))};
        const DisplacementFlow d = residual_flow_after_warp(s, *m.grid, MrmConfig{}.tps_regularization);
        OraclePredictor oracle(d, 0.5);
        IcrmConfig cfg;
        cfg.tau = 1e-12;
        cfg.max_iters = 8;
        double previous = max_abs_diff(DisplacementFlow(d.width(), d.height()), d);
        run_icrm(m.preliminary, oracle, cfg, [&](const IterationRecord& rec, const DisplacementFlow& c) {
            if (!rec.incorporated) return;
            const double now = max_abs_diff(c, d);
            worst = std::max(worst, std::abs(now / previous - 0.5));
            previous = now;
        });
        ++samples;
    }
    return {worst <= 1e-6, fmt("%d samples, max |ratio - 0.5| %.3g", samples, worst)};
}

class ScriptedPredictor : public FlowPredictor {
public:
    explicit ScriptedPredictor(std::vector<double> variances) : variances_(std::move(variances)) {}
    DisplacementFlow predict(const Raster& img) override {
        const double s = std::sqrt(variances_.at(std::min(calls_, variances_.size() - 1))) * (calls_ % 2 ? -1 : 1);
        ++calls_;
        return DisplacementFlow(img.width(), img.height(), {s, -s});
    }

private:
    std::vector<double> variances_;
    std::size_t calls_ = 0;
};

Outcome termination() {
    const Raster img = random_raster(32, 24, 1, 9);
    IcrmConfig native;
    native.working_width = img.width();
    native.working_height = img.height();
    // Below the scripted 40 so that the second flow does not already stop the loop.
    native.tau = 30.0;
    std::vector<std::string> failures;

    ZeroPredictor zero;
    const IcrmResult z = run_icrm(img, zero, native);
    if (z.trace.termination_reason != TerminationReason::BelowTau || z.trace.records.size() != 1 || !(z.final_image == img))
        failures.push_back("zero");

    ScriptedPredictor constant({100.0});
    const IcrmResult c = run_icrm(img, constant, native);
    if (c.trace.termination_reason != TerminationReason::MaxIters || c.trace.records.size() != 8u) failures.push_back("constant");

    ScriptedPredictor scripted({100.0, 40.0, 55.0});
    const IcrmResult s = run_icrm(img, scripted, native);
    const DisplacementFlow expected =
        accumulate_sum(DisplacementFlow(32, 24, {10.0, -10.0}), DisplacementFlow(32, 24, {-std::sqrt(40.0), std::sqrt(40.0)}));
    const auto& r = s.trace.records;
    const bool trace_ok = r.size() == 3 && r[0].index == 1 && r[1].index == 2 && r[2].index == 3 &&
                          std::abs(r[0].variance - 100.0) < 1e-9 && std::abs(r[1].variance - 40.0) < 1e-9 &&
                          std::abs(r[2].variance - 55.0) < 1e-9 && r[0].incorporated && r[1].incorporated && !r[2].incorporated;
    if (s.trace.termination_reason != TerminationReason::VarianceIncreased || !trace_ok || max_abs_diff(s.cumulative, expected) > 1e-12 ||
        !(s.final_image == sample(img, s.cumulative)))
        failures.push_back("scripted");

    std::string detail = failures.empty() ? "all three scenarios" : "failed:";
    for (const auto& f : failures) detail += " " + f;
    return {failures.empty(), detail};
}

Point2 corner_in_output(const SynthSample& s, const ControlGrid& g, Point2 page_corner) {
    const Point2 canvas = forward_map(s.params, s.clean.width(), page_corner);
    const TpsTransform t = tps_fit(g.target_points, g.source_points, MrmConfig{}.tps_regularization);
    const Point2 guess{page_corner.x * (g.output_width - 1.0) / (s.clean.width() - 1.0),
                       page_corner.y * (g.output_height - 1.0) / (s.clean.height() - 1.0)};
    return invert_map([&](Point2 p) { return t.apply(p); }, canvas, guess);
}

Outcome mrm_end_to_end() {
    std::vector<SynthSample> samples;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) samples.push_back(make_sample(seed));
    std::vector<MrmOutcome> outcomes;
    const auto t0 = std::chrono::steady_clock::now();
    for (const SynthSample& s : samples) {
        try {
            outcomes.push_back(margin_removal(s.distorted, segment_document(s.distorted).doc_mask));
        } catch (const NoDocument&) {
            outcomes.push_back({});
        }
    }
    const double elapsed = seconds_since(t0);

    int good = 0;
    double min_iou = 1.0, worst_corner = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const SynthSample& s = samples[i];
        const MrmOutcome& m = outcomes[i];
        min_iou = std::min(min_iou, m.iou_score);
        if (m.skipped || !m.grid) continue;
        const double pw = s.clean.width() - 1.0, ph = s.clean.height() - 1.0;
        const double ow = m.grid->output_width - 1.0, oh = m.grid->output_height - 1.0;
        double corner = 0.0;
        for (const auto& [page, out] : {std::pair<Point2, Point2>{{0, 0}, {0, 0}},
                                        {{pw, 0}, {ow, 0}},
                                        {{pw, ph}, {ow, oh}},
                                        {{0, ph}, {0, oh}}})
            corner = std::max(corner, distance(corner_in_output(s, *m.grid, page), out));
        worst_corner = std::max(worst_corner, corner);
        good += m.iou_score >= 0.96 && corner <= 2.0;
    }
    return {good == 20 && elapsed < 5.0,
            fmt("%d/20 ok, min IoU %.4f, worst corner %.2f px, %.2f s", good, min_iou, worst_corner, elapsed)};
}

Outcome iou_skip() {
    const Raster img = random_raster(120, 100, 3, 5);
    BinaryMask ragged(120, 100);
    for (int y = 0; y < 100; ++y) {
        const int reach = 20 + static_cast<int>(40 + 35 * std::sin(y * 0.7));
        for (int x = 0; x < reach; ++x) ragged.set(x, y, true);
    }
    const MrmOutcome m = margin_removal(img, ragged);
    return {m.skipped && m.iou_score < 0.96 && m.preliminary == img,
            fmt("IoU %.4f, skipped %s, identical %s", m.iou_score, m.skipped ? "yes" : "no", m.preliminary == img ? "yes" : "no")};
}

Outcome full_pipeline() {
    int good = 0;
    double min_ms = 1.0, sum_ms = 0.0, max_ld = 0.0;
    const auto t0 = std::chrono::steady_clock::now();
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        SynthOptions o;
        o.curl_amplitude = 0.8 * static_cast<double>(seed);
        const SynthSample s = make_sample(seed, o);
        MrmOutcome m;
        try {
            m = margin_removal(s.distorted, segment_document(s.distorted).doc_mask);
        } catch (const NoDocument&) {
        }
        if (!m.grid) {
            min_ms = 0.0;
            continue;
        }
        OraclePredictor oracle(residual_flow_after_warp(s, *m.grid, MrmConfig{}.tps_regularization), 0.7);
        const IcrmResult r = run_icrm(m.preliminary, oracle);
        const Raster reference = clean_in_output_frame(s.clean, m.grid->output_width, m.grid->output_height);
        const double ms = ms_ssim(r.final_image, reference);
        const double ld = local_distortion(estimate_dense_flow(r.final_image, reference));
        min_ms = std::min(min_ms, ms);
        sum_ms += ms;
        max_ld = std::max(max_ld, ld);
        good += ms >= 0.95 && ld <= 1.5;
    }
    const double elapsed = seconds_since(t0);
    return {good == 10 && elapsed < 30.0,
            fmt("%d/10 ok, MS-SSIM min %.4f mean %.4f, LD max %.3f px, %.1f s", good, min_ms, sum_ms / 10, max_ld, elapsed)};
}

Outcome metrics_sanity() {
    const Raster a = random_raster(200, 190, 3, 11);
    const double self = ms_ssim(a, a);
    const bool cer_ok = cer("abc", "abc") == 0.0 && cer("abd", "abc") == 1.0 / 3.0 && cer("ab", "abc") == 1.0 / 3.0;
    const double ld = local_distortion(DisplacementFlow(7, 5, {3, 4}));
    return {std::abs(self - 1.0) <= 1e-9 && cer_ok && ld == 5.0,
            fmt("ms_ssim(a,a) %.12f, cer %s, constant LD %.17g", self, cer_ok ? "exact" : "wrong", ld)};
}

Outcome formats() {
    TempDir dir;
    DisplacementFlow f = random_flow(37, 23, 20.0, 12);
    for (FlowVector& v : f.vectors()) v = {static_cast<float>(v.du), static_cast<float>(v.dv)};
    write_flow(f, dir / "a.flo");
    const DisplacementFlow back = read_flow(dir / "a.flo");
    write_flow(back, dir / "b.flo");
    const bool flow_ok = back == f && read_bytes(dir / "a.flo") == read_bytes(dir / "b.flo");

    write_flow(DisplacementFlow(3, 2), dir / "small.flo");
    const auto size = std::filesystem::file_size(dir / "small.flo");

    BinaryMask m(41, 29);
    SplitMix64 rng(13);
    for (int y = 0; y < 29; ++y)
        for (int x = 0; x < 41; ++x) m.set(x, y, rng.uniform() < 0.4);
    write_mask(m, dir / "m.pgm");
    const bool mask_ok = read_mask(dir / "m.pgm") == m;
    return {flow_ok && size == 60 && mask_ok,
            fmt("flow round trip %s, 3x2 file %d bytes, mask round trip %s", flow_ok ? "exact" : "differs",
                static_cast<int>(size), mask_ok ? "exact" : "differs")};
}

void reference_dp(const std::vector<Point2>& p, std::size_t i, std::size_t j, double eps, std::vector<bool>& keep) {
    if (j <= i + 1) return;
    double dmax = -1.0;
    std::size_t at = i;
    for (std::size_t k = i + 1; k < j; ++k) {
        const double dx = p[j].x - p[i].x, dy = p[j].y - p[i].y;
        const double len2 = dx * dx + dy * dy;
        const double t = len2 > 0.0 ? std::clamp(((p[k].x - p[i].x) * dx + (p[k].y - p[i].y) * dy) / len2, 0.0, 1.0) : 0.0;
        const double d = std::hypot(p[k].x - (p[i].x + t * dx), p[k].y - (p[i].y + t * dy));
        if (d > dmax) {
            dmax = d;
            at = k;
        }
    }
    if (dmax >= eps) {
        keep[at] = true;
        reference_dp(p, i, at, eps, keep);
        reference_dp(p, at, j, eps, keep);
    }
}

Outcome douglas_peucker() {
    SplitMix64 rng(14);
    int same = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = rng.uniform_int(2, 60);
        std::vector<Point2> line;
        double x = 0.0, y = 0.0;
        for (int i = 0; i < n; ++i) {
            x += rng.uniform(0.1, 4.0);
            y += rng.uniform(-3.0, 3.0);
            line.push_back({x, y});
        }
        const double eps = rng.uniform(0.0, 3.0);
        std::vector<bool> keep(line.size(), false);
        keep.front() = keep.back() = true;
        reference_dp(line, 0, line.size() - 1, eps, keep);
        Polygon expected;
        for (std::size_t i = 0; i < line.size(); ++i)
            if (keep[i]) expected.push_back(line[i]);
        same += simplify_polygon(line, eps) == expected;
    }
    return {same == 100, fmt("%d/100 identical vertex sets", same)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance checks"};
    std::vector<int> known;
    app.add_option("--known-failure", known, "Criterion expected to fail; does not affect the exit status");
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"TPS exactness", tps_exactness},
        {"sampling identity", sampling_identity},
        {"shift-invariant loss identity", shift_invariant_identity},
        {"content-aware loss", content_aware},
        {"prior relabelling grid", relabel_grid},
        {"oracle convergence", oracle_contraction},
        {"iteration termination", termination},
        {"margin removal end to end", mrm_end_to_end},
        {"IoU skip path", iou_skip},
        {"full pipeline", full_pipeline},
        {"metrics sanity", metrics_sanity},
        {"formats", formats},
        {"Douglas-Peucker equivalence", douglas_peucker},
    };

    const std::set<int> expected(known.begin(), known.end());
    int unexpected = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int number = static_cast<int>(i) + 1;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const bool listed = expected.count(number) > 0;
        std::printf("%2d %s  %s: %s%s\n", number, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(), o.detail.c_str(),
                    !o.pass && listed ? " (known failure)" : "");
        std::fflush(stdout);
        if (!o.pass && !listed) ++unexpected;
    }
    return unexpected == 0 ? 0 : 1;
}
