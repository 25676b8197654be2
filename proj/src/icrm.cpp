#include "marior/icrm.hpp"

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include "marior/errors.hpp"

namespace marior {

std::string to_string(TerminationReason reason) {
    switch (reason) {
        case TerminationReason::VarianceIncreased: return "VarianceIncreased";
        case TerminationReason::BelowTau: return "BelowTau";
        case TerminationReason::MaxIters: return "MaxIters";
    }
    return "MaxIters";
}

std::string to_string(Accumulation mode) { return mode == Accumulation::Sum ? "sum" : "compose"; }

namespace {

DisplacementFlow predict_checked(FlowPredictor& predictor, const Raster& img, int iteration) {
    const std::string where = "iteration " + std::to_string(iteration) + ": ";
    DisplacementFlow flow;
    try {
        flow = predictor.predict(img);
    } catch (const DimensionMismatch& e) {
        throw DimensionMismatch(where + e.what());
    } catch (const std::exception& e) {
        throw PredictorFailed(where + e.what());
    }
    if (flow.width() != img.width() || flow.height() != img.height())
        throw DimensionMismatch(where + "predicted flow does not match the image size");
    return flow;
}

}  // namespace

IcrmResult run_icrm(const Raster& img, FlowPredictor& predictor, const IcrmConfig& cfg,
                    const IterationObserver& observer) {
    if (img.empty()) throw InvalidArgument("run_icrm: empty image");
    if (!(cfg.tau > 0.0)) throw InvalidArgument("run_icrm: tau must be positive");
    if (cfg.max_iters < 1) throw InvalidArgument("run_icrm: max_iters must be at least 1");
    if (cfg.working_width <= 0 || cfg.working_height <= 0) throw InvalidArgument("run_icrm: bad working resolution");

    const double sx = static_cast<double>(cfg.working_width) / img.width();
    const double sy = static_cast<double>(cfg.working_height) / img.height();

    IcrmResult result;
    result.cumulative = DisplacementFlow(img.width(), img.height());
    Raster current = img;
    double previous_variance = 0.0;
    for (int n = 1; n <= cfg.max_iters; ++n) {
        const DisplacementFlow d = predict_checked(predictor, current, n);
        const FlowStats stats = flow_stats(scale_vectors(d, sx, sy));
        IterationRecord record{n, stats.variance, stats.mean_magnitude, false};

        const bool rose = n >= 2 && stats.variance > previous_variance;
        if (!rose || cfg.keep_rejected_flow) {
            result.cumulative = cfg.accumulation == Accumulation::Sum ? accumulate_sum(result.cumulative, d)
                                                                       : accumulate_compose(result.cumulative, d);
            record.incorporated = true;
        }
        result.trace.records.push_back(record);
        if (observer) observer(record, result.cumulative);

        if (rose) {
            result.trace.termination_reason = TerminationReason::VarianceIncreased;
            break;
        }
        if (stats.variance <= cfg.tau) {
            result.trace.termination_reason = TerminationReason::BelowTau;
            break;
        }
        if (n == cfg.max_iters) {
            result.trace.termination_reason = TerminationReason::MaxIters;
            break;
        }
        previous_variance = stats.variance;
        current = sample(img, result.cumulative);
    }
    result.final_image = sample(img, result.cumulative);
    return result;
}

OraclePredictor::OraclePredictor(DisplacementFlow gt_flow, double gain)
    : gt_(std::move(gt_flow)), applied_(gt_.width(), gt_.height()), gain_(gain) {
    if (!(gain > 0.0 && gain <= 1.0)) throw InvalidArgument("oracle gain must lie in (0, 1]");
}

DisplacementFlow OraclePredictor::predict(const Raster& img) {
    if (img.width() != gt_.width() || img.height() != gt_.height())
        throw DimensionMismatch("oracle predictor: image does not match the ground-truth flow");
    DisplacementFlow out(gt_.width(), gt_.height());
    for (std::size_t i = 0; i < out.vectors().size(); ++i) {
        const FlowVector g = gt_.vectors()[i];
        FlowVector& c = applied_.vectors()[i];
        const FlowVector d{gain_ * (g.du - c.du), gain_ * (g.dv - c.dv)};
        out.vectors()[i] = d;
        c.du += d.du;
        c.dv += d.dv;
    }
    return out;
}

namespace {

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'')
            out += "'\\''";
        else
            out += c;
    }
    return out + "'";
}

class TempDir {
public:
    TempDir() {
        std::string pattern = (std::filesystem::temp_directory_path() / "marior-XXXXXX").string();
        if (mkdtemp(pattern.data()) == nullptr) throw IoError("cannot create a temporary directory");
        path_ = pattern;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace

ExternalPredictor::ExternalPredictor(std::string command) : command_(std::move(command)) {
    if (command_.empty()) throw InvalidArgument("external predictor: empty command");
}

DisplacementFlow ExternalPredictor::predict(const Raster& img) {
    TempDir dir;
    const auto input = dir.path() / "input.png";
    const auto output = dir.path() / "output.flo";
    write_image(img, input);
    const std::string cmd = command_ + " " + shell_quote(input.string()) + " " + shell_quote(output.string());
    const int status = std::system(cmd.c_str());
    if (status == -1) throw PredictorFailed("external predictor: could not launch '" + command_ + "'");
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        throw PredictorFailed("external predictor exited with status " + std::to_string(code));
    }
    DisplacementFlow flow;
    try {
        flow = read_flow(output);
    } catch (const IoError& e) {
        throw PredictorFailed(std::string("external predictor produced no valid flow: ") + e.what());
    }
    if (flow.width() != img.width() || flow.height() != img.height())
        throw DimensionMismatch("external predictor returned a " + std::to_string(flow.width()) + "x" +
                                std::to_string(flow.height()) + " flow for a " + std::to_string(img.width()) + "x" +
                                std::to_string(img.height()) + " image");
    return flow;
}

std::unique_ptr<FlowPredictor> oracle_predictor(DisplacementFlow gt_flow, double gain) {
    return std::make_unique<OraclePredictor>(std::move(gt_flow), gain);
}

std::unique_ptr<FlowPredictor> external_predictor(std::string command_template) {
    return std::make_unique<ExternalPredictor>(std::move(command_template));
}

}  // namespace marior
