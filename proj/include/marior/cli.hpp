#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "marior/icrm.hpp"
#include "marior/mrm.hpp"

namespace marior::cli {

enum ExitCode : int { Ok = 0, IoFailure = 1, PredictorFailure = 2, BadArguments = 3 };

// One processed image.
struct RunReport {
    std::string input;
    bool mrm_skipped = true;
    double iou_score = 0.0;
    int preliminary_width = 0;
    int preliminary_height = 0;
    IterationTrace trace;
    std::string output_image;
    std::string output_flow;
    std::string output_report;
    std::optional<double> ms_ssim_vs_reference;
    std::optional<double> ld_vs_reference;
    double wall_clock_ms = 0.0;
};

// JSON with a fixed field order.
std::string to_json(const RunReport& report);

// Parses "zero", "oracle:<gt.flo>[:gain]" or "external:<command>".
struct PredictorSpec {
    enum class Kind { Zero, Oracle, External } kind = Kind::Zero;
    std::string path_or_command;
    double gain = 1.0;
};
PredictorSpec parse_predictor_spec(const std::string& text);

// Entry point shared by the executable and the tests. Diagnostics go to stderr,
// JSON results to stdout.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args);

}  // namespace marior::cli
