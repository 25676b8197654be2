#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "marior/raster.hpp"
#include "marior/warpfield.hpp"

namespace marior {

enum class Accumulation { Sum, Compose };

enum class TerminationReason { VarianceIncreased, BelowTau, MaxIters };

std::string to_string(TerminationReason reason);
std::string to_string(Accumulation mode);

struct IcrmConfig {
    double tau = 60.0;  // pixels^2 at the working resolution
    int max_iters = 8;
    Accumulation accumulation = Accumulation::Sum;
    int working_width = 1024;
    int working_height = 960;
    // When the variance rises, also fold the offending flow into the result.
    bool keep_rejected_flow = false;
};

struct IterationRecord {
    int index = 0;
    double variance = 0.0;
    double mean_magnitude = 0.0;
    bool incorporated = false;
};

struct IterationTrace {
    std::vector<IterationRecord> records;
    TerminationReason termination_reason = TerminationReason::MaxIters;
};

class FlowPredictor {
public:
    virtual ~FlowPredictor() = default;
    // Must return a flow with the image's dimensions.
    virtual DisplacementFlow predict(const Raster& img) = 0;
};

struct IcrmResult {
    Raster final_image;
    DisplacementFlow cumulative;
    IterationTrace trace;
};

// Called after each iteration with its record and the cumulative flow so far.
using IterationObserver = std::function<void(const IterationRecord&, const DisplacementFlow&)>;

// Iterative rectification. Iteration n predicts from the image sampled with
// the flows accepted so far, measures the flow variance at the working
// resolution and stops when it rises (the new flow is dropped), falls to tau,
// or max_iters is reached. The final image is a single resampling of the
// input by the cumulative flow.
IcrmResult run_icrm(const Raster& img, FlowPredictor& predictor, const IcrmConfig& cfg = {},
                    const IterationObserver& observer = {});

class ZeroPredictor : public FlowPredictor {
public:
    DisplacementFlow predict(const Raster& img) override { return DisplacementFlow(img.width(), img.height()); }
};

// Test stand-in for a trained network: returns gain * (gt - C), where C is
// the sum of everything it has returned so far.
class OraclePredictor : public FlowPredictor {
public:
    OraclePredictor(DisplacementFlow gt_flow, double gain);
    DisplacementFlow predict(const Raster& img) override;

    const DisplacementFlow& applied() const { return applied_; }

private:
    DisplacementFlow gt_;
    DisplacementFlow applied_;
    double gain_;
};

// Runs `<command> <input.png> <output.flo>` per call and reads the flow back.
class ExternalPredictor : public FlowPredictor {
public:
    explicit ExternalPredictor(std::string command);
    DisplacementFlow predict(const Raster& img) override;

private:
    std::string command_;
};

std::unique_ptr<FlowPredictor> oracle_predictor(DisplacementFlow gt_flow, double gain);
std::unique_ptr<FlowPredictor> external_predictor(std::string command_template);

}  // namespace marior
