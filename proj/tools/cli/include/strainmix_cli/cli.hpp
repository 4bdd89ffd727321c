#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "strainmix/model.hpp"

namespace strainmix::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitInput = 1,
    kExitInference = 2,
    kExitPartial = 3,
};

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct TruthRecord {
    std::string sample_id;
    ModelParams params;
    std::size_t m = 0;
    std::uint32_t coverage = 0;
};

std::string truth_json(const std::vector<TruthRecord>& records);
std::vector<TruthRecord> parse_truth_json(std::istream& in);

}  // namespace strainmix::cli
