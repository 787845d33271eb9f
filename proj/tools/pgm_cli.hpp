#pragma once

#include "pgm/interp.hpp"
#include "pgm/pyramid_flow.hpp"

#include <optional>
#include <ostream>

namespace pgm::cli {

enum ExitCode { kOk = 0, kUsage = 1, kIo = 2, kData = 3 };

enum class InterpChoice { Auto, NW, LA };

struct RunConfig {
    PipelineConfig pipeline = PipelineConfig::defaults();
    int spacing = 3;
    InterpChoice interp = InterpChoice::Auto;
    double threshold = kDefaultDensityThreshold;
};

/// Mode actually used for `matches` under `cfg` (override or density rule).
InterpolatorMode choose_interpolator(const RunConfig& cfg, std::size_t matches, int width, int height);

/// Entry point behind the `pgm` executable. Returns one of ExitCode.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pgm::cli
