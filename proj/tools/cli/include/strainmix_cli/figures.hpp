#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "strainmix/model.hpp"

namespace strainmix::cli {

struct FigurePoint {
    std::string snp_id;
    double plaf = 0.0;
    double wsaf = 0.0;
};

struct BandLine {
    std::uint32_t mask = 0;
    std::vector<double> plaf;
    std::vector<double> wsaf;
};

/// Data behind one WSAF-vs-PLAF panel: observed reads, the fitted band lines
/// and reads re-simulated from the fitted parameters at the observed coverage.
struct WsafFigure {
    std::string sample_id;
    std::vector<FigurePoint> observed;
    std::vector<BandLine> bands;
    std::vector<FigurePoint> simulated;
};

WsafFigure build_wsaf_figure(const SampleData& data, const std::vector<std::string>& snp_ids,
                             const Plaf& plaf, const ModelParams& params, std::uint64_t seed);

/// Long format: kind,snp_id,band,plaf,wsaf with kind in {observed,band,simulated}.
void write_wsaf_csv(std::ostream& out, const WsafFigure& fig);
void write_wsaf_svg(std::ostream& out, const WsafFigure& fig);

}  // namespace strainmix::cli
