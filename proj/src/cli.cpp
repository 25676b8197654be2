#include "marior/cli.hpp"

#include <algorithm>
#include <cctype>
#include <atomic>
#include <chrono>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>
#include <variant>

#include <CLI11.hpp>
#include <json.hpp>

#include "marior/errors.hpp"
#include "marior/losses.hpp"
#include "marior/metrics.hpp"
#include "marior/synth.hpp"

namespace marior::cli {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json trace_json(const IterationTrace& trace) {
    ordered_json records = ordered_json::array();
    for (const IterationRecord& r : trace.records)
        records.push_back({{"index", r.index},
                           {"variance", r.variance},
                           {"mean_magnitude", r.mean_magnitude},
                           {"incorporated", r.incorporated}});
    return {{"termination_reason", to_string(trace.termination_reason)}, {"iterations", records}};
}

ordered_json report_json(const RunReport& r) {
    ordered_json j;
    j["input"] = r.input;
    j["mrm"] = {{"skipped", r.mrm_skipped},
                {"iou_score", r.iou_score},
                {"output_width", r.preliminary_width},
                {"output_height", r.preliminary_height}};
    j["icrm"] = trace_json(r.trace);
    j["outputs"] = {{"image", r.output_image}, {"flow", r.output_flow}, {"report", r.output_report}};
    if (r.ms_ssim_vs_reference || r.ld_vs_reference) {
        ordered_json eval;
        if (r.ms_ssim_vs_reference) eval["ms_ssim"] = *r.ms_ssim_vs_reference;
        if (r.ld_vs_reference) eval["ld"] = *r.ld_vs_reference;
        j["evaluation"] = eval;
    }
    j["wall_clock_ms"] = r.wall_clock_ms;
    return j;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << text << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string s = ss.str();
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    return s;
}

std::vector<double> read_numbers(const fs::path& path) {
    std::istringstream in(read_text(path));
    std::vector<double> values;
    std::string token;
    while (in >> token) {
        try {
            values.push_back(std::stod(token));
        } catch (const std::exception&) {
            throw FormatError(path.string() + ": not a number: " + token);
        }
    }
    return values;
}

SoftMask read_soft_mask(const fs::path& path) {
    const Raster r = to_grayscale(read_image(path));
    return SoftMask::from_values(r.width(), r.height(), std::vector<double>(r.data().begin(), r.data().end()));
}

std::unique_ptr<FlowPredictor> make_predictor(const PredictorSpec& spec) {
    switch (spec.kind) {
        case PredictorSpec::Kind::Zero: return std::make_unique<ZeroPredictor>();
        case PredictorSpec::Kind::Oracle: return oracle_predictor(read_flow(spec.path_or_command), spec.gain);
        case PredictorSpec::Kind::External: return external_predictor(spec.path_or_command);
    }
    return std::make_unique<ZeroPredictor>();
}

struct DewarpOptions {
    std::string input;
    std::string input_dir;
    std::string out_dir;
    std::string mask;
    std::string reference;
    std::string predictor = "zero";
    double tau = 60.0;
    int max_iters = 8;
    double iou_threshold = 0.96;
    std::string accumulate = "sum";
    int points_per_edge = 3;
    std::uint64_t seed = 0;
    int jobs = 1;
};

struct Failure {
    ExitCode code;
    std::string message;
};

// Processes one image; returns the report or the failure to surface.
std::variant<RunReport, Failure> dewarp_one(const fs::path& input, const DewarpOptions& o, const PredictorSpec& spec,
                                            const MrmConfig& mrm_cfg, const IcrmConfig& icrm_cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    RunReport report;
    report.input = input.string();

    Raster img;
    BinaryMask mask;
    Raster reference;
    try {
        img = read_image(input);
        if (!o.mask.empty()) {
            mask = read_mask(o.mask);
        } else {
            try {
                mask = segment_document(img).doc_mask;
            } catch (const NoDocument&) {
                mask = BinaryMask(img.width(), img.height());
            }
        }
        if (!o.reference.empty()) reference = read_image(o.reference);
    } catch (const IoError& e) {
        return Failure{IoFailure, e.what()};
    }
    if (mask.width() != img.width() || mask.height() != img.height())
        return Failure{BadArguments, "mask dimensions do not match " + input.string()};

    const MrmOutcome mrm = margin_removal(img, mask, mrm_cfg);
    report.mrm_skipped = mrm.skipped;
    report.iou_score = mrm.iou_score;
    report.preliminary_width = mrm.preliminary.width();
    report.preliminary_height = mrm.preliminary.height();

    IcrmResult icrm;
    try {
        const auto predictor = make_predictor(spec);
        icrm = run_icrm(mrm.preliminary, *predictor, icrm_cfg);
    } catch (const InvalidArgument& e) {
        return Failure{BadArguments, e.what()};
    } catch (const IoError& e) {
        return Failure{IoFailure, e.what()};
    } catch (const Error& e) {
        return Failure{PredictorFailure, e.what()};
    }
    report.trace = icrm.trace;

    if (!reference.empty()) {
        if (reference.width() != icrm.final_image.width() || reference.height() != icrm.final_image.height())
            return Failure{BadArguments, "reference image dimensions do not match the dewarped output"};
        try {
            report.ms_ssim_vs_reference = ms_ssim(icrm.final_image, reference);
        } catch (const InvalidArgument&) {
        }
        report.ld_vs_reference = local_distortion(estimate_dense_flow(icrm.final_image, reference));
    }

    const std::string stem = input.stem().string();
    const fs::path out_dir(o.out_dir);
    report.output_image = (out_dir / (stem + "_dewarped.png")).string();
    report.output_flow = (out_dir / (stem + "_flow.flo")).string();
    report.output_report = (out_dir / (stem + "_report.json")).string();
    try {
        fs::create_directories(out_dir);
        write_image(icrm.final_image, report.output_image);
        write_flow(icrm.cumulative, report.output_flow);
        report.wall_clock_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        write_text(report.output_report, to_json(report));
    } catch (const std::exception& e) {
        return Failure{IoFailure, e.what()};
    }
    return report;
}

int cmd_dewarp(const DewarpOptions& o) {
    PredictorSpec spec;
    MrmConfig mrm_cfg;
    IcrmConfig icrm_cfg;
    try {
        spec = parse_predictor_spec(o.predictor);
        if (o.accumulate != "sum" && o.accumulate != "compose") throw InvalidArgument("--accumulate must be sum or compose");
        if (!(o.tau > 0.0)) throw InvalidArgument("--tau must be positive");
        if (o.max_iters < 1) throw InvalidArgument("--max-iters must be at least 1");
        if (!(o.iou_threshold > 0.0 && o.iou_threshold <= 1.0)) throw InvalidArgument("--iou-threshold must lie in (0, 1]");
        if (o.points_per_edge < 0) throw InvalidArgument("--points-per-edge must be non-negative");
        if (o.jobs < 1) throw InvalidArgument("--jobs must be at least 1");
        if (o.input.empty() == o.input_dir.empty()) throw InvalidArgument("give exactly one of --input or --input-dir");
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return BadArguments;
    }
    mrm_cfg.iou_skip_threshold = o.iou_threshold;
    mrm_cfg.control_points_per_edge = o.points_per_edge;
    icrm_cfg.tau = o.tau;
    icrm_cfg.max_iters = o.max_iters;
    icrm_cfg.accumulation = o.accumulate == "sum" ? Accumulation::Sum : Accumulation::Compose;

    std::vector<fs::path> inputs;
    if (!o.input.empty()) {
        inputs.push_back(o.input);
    } else {
        std::error_code ec;
        for (const auto& entry : fs::directory_iterator(o.input_dir, ec)) {
            std::string ext = entry.path().extension().string();
            std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
            if (entry.is_regular_file() && (ext == ".png" || ext == ".pgm" || ext == ".ppm")) inputs.push_back(entry.path());
        }
        if (ec) {
            std::cerr << "error: cannot list " << o.input_dir << ": " << ec.message() << '\n';
            return IoFailure;
        }
        std::sort(inputs.begin(), inputs.end());
    }

    std::vector<std::variant<RunReport, Failure>> results(inputs.size(), Failure{Ok, ""});
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < inputs.size(); i = next++) results[i] = dewarp_one(inputs[i], o, spec, mrm_cfg, icrm_cfg);
    };
    const int threads = std::min<int>(o.jobs, static_cast<int>(std::max<std::size_t>(inputs.size(), 1)));
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    int exit_code = Ok;
    ordered_json batch = ordered_json::array();
    for (const auto& r : results) {
        if (const auto* f = std::get_if<Failure>(&r)) {
            std::cerr << "error: " << f->message << '\n';
            if (exit_code == Ok) exit_code = f->code;
        } else {
            batch.push_back(report_json(std::get<RunReport>(r)));
        }
    }
    if (!o.input_dir.empty() && !batch.empty()) {
        try {
            write_text(fs::path(o.out_dir) / "batch_report.json", batch.dump(2));
        } catch (const IoError& e) {
            std::cerr << "error: " << e.what() << '\n';
            if (exit_code == Ok) exit_code = IoFailure;
        }
    }
    if (!o.input.empty() && exit_code == Ok) std::cout << batch.front().dump(2) << '\n';
    return exit_code;
}

struct SynthCliOptions {
    std::string out_dir;
    std::uint64_t seed = 0;
    int count = 1;
    SynthOptions synth;
    std::string texture = "noise";
    bool with_residual = false;
};

ordered_json params_json(const SynthSample& s, const SynthOptions& o) {
    ordered_json h = ordered_json::array();
    for (const auto& row : s.params.homography) h.push_back({row[0], row[1], row[2]});
    return {{"seed", s.seed},
            {"page_width", o.page_width},
            {"page_height", o.page_height},
            {"canvas_width", o.canvas_width},
            {"canvas_height", o.canvas_height},
            {"homography", h},
            {"curl_amplitude", s.params.curl_amplitude},
            {"curl_frequency", s.params.curl_frequency},
            {"curl_phase", s.params.curl_phase},
            {"margin_fraction", s.params.margin_fraction},
            {"margin_texture", to_string(s.params.margin_texture)},
            {"texture_seed", s.params.texture_seed}};
}

int cmd_synth(SynthCliOptions o) {
    try {
        o.synth.margin_texture = margin_texture_from_string(o.texture);
        if (o.count < 1) throw InvalidArgument("--count must be at least 1");
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return BadArguments;
    }
    for (int i = 0; i < o.count; ++i) {
        const std::uint64_t seed = o.seed + static_cast<std::uint64_t>(i);
        SynthSample s;
        try {
            s = make_sample(seed, o.synth);
        } catch (const Error& e) {
            std::cerr << "error: " << e.what() << '\n';
            return BadArguments;
        }
        const fs::path dir = o.count == 1 ? fs::path(o.out_dir) : fs::path(o.out_dir) / ("sample_" + std::to_string(seed));
        try {
            fs::create_directories(dir);
            write_image(s.clean, dir / "clean.png");
            write_image(s.distorted, dir / "distorted.png");
            write_flow(s.gt_backward, dir / "gt.flo");
            write_mask(s.doc_mask, dir / "doc_mask.pgm");
            write_mask(s.edge_mask, dir / "edge_mask.pgm");
            write_mask(s.content_mask, dir / "content_mask.pgm");
            ordered_json params = params_json(s, o.synth);
            if (o.with_residual) {
                // Residual for the margin-removed frame produced by `dewarp --mask doc_mask.pgm`.
                const MrmConfig cfg;
                const MrmOutcome mrm = margin_removal(s.distorted, s.doc_mask, cfg);
                if (mrm.grid) {
                    write_flow(residual_flow_after_warp(s, *mrm.grid, cfg.tps_regularization), dir / "residual.flo");
                    write_image(clean_in_output_frame(s.clean, mrm.grid->output_width, mrm.grid->output_height),
                                dir / "reference.png");
                }
                params["residual_written"] = mrm.grid.has_value();
            }
            write_text(dir / "params.json", params.dump(2));
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return IoFailure;
        }
    }
    return Ok;
}

struct EvalOptions {
    std::string a, b, flow, recognized, reference;
    int patch = 16;
    int search = 24;
};

int cmd_eval(const EvalOptions& o) {
    const bool images = !o.a.empty() || !o.b.empty();
    const bool text = !o.recognized.empty() || !o.reference.empty();
    if ((images && (o.a.empty() || o.b.empty())) || (text && (o.recognized.empty() || o.reference.empty())) ||
        (!images && !text && o.flow.empty())) {
        std::cerr << "error: give --a and --b, and/or --recognized and --reference, or --flow\n";
        return BadArguments;
    }
    ordered_json out;
    try {
        if (images) {
            const Raster a = read_image(o.a);
            const Raster b = read_image(o.b);
            out["ms_ssim"] = ms_ssim(a, b);
            const DisplacementFlow field = o.flow.empty() ? estimate_dense_flow(a, b, o.patch, o.search) : read_flow(o.flow);
            out["ld"] = local_distortion(field);
        } else if (!o.flow.empty()) {
            out["ld"] = local_distortion(read_flow(o.flow));
        }
        if (text) out["cer"] = cer(read_text(o.recognized), read_text(o.reference));
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return IoFailure;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return BadArguments;
    }
    std::cout << out.dump(2) << '\n';
    return Ok;
}

struct LossOptions {
    std::string pred, gt, content;
    std::string mask_pred, mask_gt, edge_pred, edge_gt;
    std::string real_scores, fake_scores;
    LossConfig cfg;
};

int cmd_losses(const LossOptions& o) {
    const bool flows = !o.pred.empty() || !o.gt.empty();
    const bool masks = !o.mask_pred.empty() || !o.mask_gt.empty();
    if ((flows && (o.pred.empty() || o.gt.empty())) || (masks && (o.mask_pred.empty() || o.mask_gt.empty())) ||
        (o.real_scores.empty() != o.fake_scores.empty()) || (o.edge_pred.empty() != o.edge_gt.empty()) ||
        (!flows && !masks)) {
        std::cerr << "error: give --pred/--gt flows and/or --mask-pred/--mask-gt masks\n";
        return BadArguments;
    }
    ordered_json out;
    try {
        if (flows) {
            const DisplacementFlow pred = read_flow(o.pred);
            const DisplacementFlow gt = read_flow(o.gt);
            const SoftMask content = o.content.empty() ? SoftMask(gt.width(), gt.height()) : SoftMask::from_binary(read_mask(o.content));
            const double l_c = content_aware_loss(pred, gt, content, o.cfg.beta);
            const double l_s = shift_invariant_loss(pred, gt);
            out["l_c"] = l_c;
            out["l_s"] = l_s;
            out["l_icrm"] = icrm_total(l_c, l_s, o.cfg.alpha);
        }
        if (masks) {
            const SoftMask gt = SoftMask::from_binary(read_mask(o.mask_gt));
            const SoftMask pred = read_soft_mask(o.mask_pred);
            const double l_mask = bce_loss(pred, gt, o.cfg.clamp_eps);
            double l_edge = 0.0;
            if (!o.edge_pred.empty())
                l_edge = bce_loss(read_soft_mask(o.edge_pred), SoftMask::from_binary(read_mask(o.edge_gt)), o.cfg.clamp_eps);
            double l_prior = 0.0;
            if (!o.real_scores.empty())
                l_prior = prior_loss(read_numbers(o.real_scores), read_numbers(o.fake_scores), o.cfg.clamp_eps);
            out["l_mask"] = l_mask;
            out["l_edge"] = l_edge;
            out["l_prior"] = l_prior;
            out["l_mrm"] = mrm_total(l_prior, l_mask, l_edge, o.cfg.lambda_prior);
        }
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return IoFailure;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return BadArguments;
    }
    std::cout << out.dump(2) << '\n';
    return Ok;
}

}  // namespace

std::string to_json(const RunReport& report) { return report_json(report).dump(2); }

PredictorSpec parse_predictor_spec(const std::string& text) {
    PredictorSpec spec;
    if (text == "zero") return spec;
    if (text.rfind("external:", 0) == 0) {
        spec.kind = PredictorSpec::Kind::External;
        spec.path_or_command = text.substr(9);
        if (spec.path_or_command.empty()) throw InvalidArgument("external predictor needs a command");
        return spec;
    }
    if (text.rfind("oracle:", 0) == 0) {
        spec.kind = PredictorSpec::Kind::Oracle;
        std::string rest = text.substr(7);
        const auto colon = rest.rfind(':');
        if (colon != std::string::npos) {
            const std::string tail = rest.substr(colon + 1);
            char* end = nullptr;
            const double gain = std::strtod(tail.c_str(), &end);
            if (!tail.empty() && end == tail.c_str() + tail.size()) {
                if (!(gain > 0.0 && gain <= 1.0)) throw InvalidArgument("oracle gain must lie in (0, 1]");
                spec.gain = gain;
                rest = rest.substr(0, colon);
            }
        }
        if (rest.empty()) throw InvalidArgument("oracle predictor needs a flow file");
        spec.path_or_command = rest;
        return spec;
    }
    throw InvalidArgument("unknown predictor: " + text);
}

int run(int argc, char** argv) {
    CLI::App app{"Document dewarping: margin removal and iterative content rectification"};
    app.require_subcommand(1);

    DewarpOptions dw;
    auto* dewarp = app.add_subcommand("dewarp", "Rectify one image or a directory of images");
    dewarp->add_option("--input", dw.input, "Input image (PNG/PGM/PPM)");
    dewarp->add_option("--input-dir", dw.input_dir, "Process every image in this directory");
    dewarp->add_option("--out-dir", dw.out_dir, "Output directory")->required();
    dewarp->add_option("--mask", dw.mask, "Document mask (PGM) instead of the built-in segmenter");
    dewarp->add_option("--reference", dw.reference, "Flat ground truth; adds MS-SSIM and LD to the report");
    dewarp->add_option("--predictor", dw.predictor, "zero | oracle:<gt.flo>[:gain] | external:<cmd>");
    dewarp->add_option("--tau", dw.tau, "Variance threshold (px^2 at 1024x960)");
    dewarp->add_option("--max-iters", dw.max_iters, "Iteration cap");
    dewarp->add_option("--iou-threshold", dw.iou_threshold, "Skip TPS below this IoU");
    dewarp->add_option("--accumulate", dw.accumulate, "sum | compose");
    dewarp->add_option("--points-per-edge", dw.points_per_edge, "Equidistant control points per edge");
    dewarp->add_option("--seed", dw.seed, "Recorded for reproducibility");
    dewarp->add_option("--jobs", dw.jobs, "Parallel images in batch mode");

    SynthCliOptions sy;
    auto* synth = app.add_subcommand("synth", "Write synthetic warped documents with ground truth");
    synth->add_option("--out-dir", sy.out_dir, "Output directory")->required();
    synth->add_option("--seed", sy.seed, "First seed");
    synth->add_option("--count", sy.count, "Number of samples (one sub-directory each when > 1)");
    synth->add_option("--page-width", sy.synth.page_width);
    synth->add_option("--page-height", sy.synth.page_height);
    synth->add_option("--canvas-width", sy.synth.canvas_width);
    synth->add_option("--canvas-height", sy.synth.canvas_height);
    synth->add_option("--perspective", sy.synth.perspective, "Corner jitter, fraction of the page");
    synth->add_option("--curl", sy.synth.curl_amplitude, "Curl amplitude in pixels");
    synth->add_option("--margin", sy.synth.margin_fraction, "Minimum margin, fraction of the canvas");
    synth->add_option("--texture", sy.texture, "solid | checker | noise");
    synth->add_flag("--with-residual", sy.with_residual, "Also write residual.flo and reference.png");

    EvalOptions ev;
    auto* eval = app.add_subcommand("eval", "MS-SSIM / LD between images, CER between texts");
    eval->add_option("--a", ev.a, "Rectified image");
    eval->add_option("--b", ev.b, "Ground-truth image");
    eval->add_option("--flow", ev.flow, "Correspondence field for LD (.flo)");
    eval->add_option("--patch", ev.patch);
    eval->add_option("--search", ev.search);
    eval->add_option("--recognized", ev.recognized, "Recognized text file");
    eval->add_option("--reference", ev.reference, "Reference text file");

    LossOptions lo;
    auto* losses = app.add_subcommand("losses", "Evaluate training losses on flows and masks");
    losses->add_option("--pred", lo.pred, "Predicted flow (.flo)");
    losses->add_option("--gt", lo.gt, "Ground-truth flow (.flo)");
    losses->add_option("--content", lo.content, "Content mask (PGM)");
    losses->add_option("--mask-pred", lo.mask_pred, "Predicted document mask, gray levels as probabilities");
    losses->add_option("--mask-gt", lo.mask_gt, "Ground-truth document mask (PGM)");
    losses->add_option("--edge-pred", lo.edge_pred);
    losses->add_option("--edge-gt", lo.edge_gt);
    losses->add_option("--real-scores", lo.real_scores, "Discriminator scores on relabelled masks");
    losses->add_option("--fake-scores", lo.fake_scores, "Discriminator scores on predicted masks");
    losses->add_option("--alpha", lo.cfg.alpha);
    losses->add_option("--beta", lo.cfg.beta);
    losses->add_option("--lambda", lo.cfg.lambda_prior);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return BadArguments;
    }

    if (dewarp->parsed()) return cmd_dewarp(dw);
    if (synth->parsed()) return cmd_synth(sy);
    if (eval->parsed()) return cmd_eval(ev);
    if (losses->parsed()) return cmd_losses(lo);
    return BadArguments;
}

int run(const std::vector<std::string>& args) {
    std::vector<std::string> storage{"marior"};
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : storage) argv.push_back(s.data());
    argv.push_back(nullptr);
    return run(static_cast<int>(storage.size()), argv.data());
}

}  // namespace marior::cli
