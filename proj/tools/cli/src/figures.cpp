#include "strainmix_cli/figures.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "strainmix/numeric.hpp"
#include "strainmix/random.hpp"
#include "strainmix/simulator.hpp"

namespace strainmix::cli {

namespace {

constexpr int kGridPoints = 101;

void put(std::ostream& out, const char* kind, const std::string& id, const std::string& band, double p,
         double w) {
    out << kind << ',' << id << ',' << band << ',' << format_number(p) << ',' << format_number(w) << '\n';
}

// Plot area inside a 640x480 canvas.
constexpr double kLeft = 60, kTop = 30, kWidth = 540, kHeight = 390;

double sx(double p) { return kLeft + p * kWidth; }
double sy(double w) { return kTop + (1.0 - w) * kHeight; }

}  // namespace

WsafFigure build_wsaf_figure(const SampleData& data, const std::vector<std::string>& snp_ids,
                             const Plaf& plaf, const ModelParams& params, std::uint64_t seed) {
    WsafFigure fig;
    fig.sample_id = data.sample_id;

    std::vector<double> kept_p;
    std::vector<std::uint32_t> coverage;
    std::vector<std::size_t> kept;
    for (std::size_t j = 0; j < data.size(); ++j) {
        const auto t = data.counts[j].total();
        if (t == 0) continue;
        fig.observed.push_back({snp_ids[j], plaf[j], static_cast<double>(data.counts[j].nonref_reads) / t});
        kept.push_back(j);
        kept_p.push_back(plaf[j]);
        coverage.push_back(t);
    }

    const BandSet bands(params.k);
    fig.bands.resize(bands.size());
    for (std::size_t r = 0; r < bands.size(); ++r) fig.bands[r].mask = bands.mask(r);
    for (int i = 0; i < kGridPoints; ++i) {
        double p = static_cast<double>(i) / (kGridPoints - 1);
        p = std::min(std::max(p, kFreqClamp), 1.0 - kFreqClamp);
        const auto q = band_wsaf(bands, params, p);
        for (std::size_t r = 0; r < bands.size(); ++r) {
            fig.bands[r].plaf.push_back(p);
            fig.bands[r].wsaf.push_back(q[r]);
        }
    }

    if (!kept.empty()) {
        Rng rng(derive_seed(seed, "figure:" + data.sample_id));
        const auto sim = simulate_reads(params, Plaf(kept_p), coverage, rng, data.sample_id);
        for (std::size_t i = 0; i < kept.size(); ++i) {
            fig.simulated.push_back(
                {snp_ids[kept[i]], kept_p[i], static_cast<double>(sim.counts[i].nonref_reads) / coverage[i]});
        }
    }
    return fig;
}

void write_wsaf_csv(std::ostream& out, const WsafFigure& fig) {
    out << "kind,snp_id,band,plaf,wsaf\n";
    for (const auto& pt : fig.observed) put(out, "observed", pt.snp_id, "", pt.plaf, pt.wsaf);
    for (const auto& line : fig.bands) {
        const std::string band = std::to_string(line.mask);
        for (std::size_t i = 0; i < line.plaf.size(); ++i) put(out, "band", "", band, line.plaf[i], line.wsaf[i]);
    }
    for (const auto& pt : fig.simulated) put(out, "simulated", pt.snp_id, "", pt.plaf, pt.wsaf);
}

void write_wsaf_svg(std::ostream& out, const WsafFigure& fig) {
    char buf[160];
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" viewBox=\"0 0 640 480\">\n";
    out << "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" stroke=\"black\"/>\n",
                  kLeft, kTop, kWidth, kHeight);
    out << buf;
    for (int i = 0; i <= 4; ++i) {
        const double v = i / 4.0;
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" text-anchor=\"middle\">%.2f</text>\n", sx(v),
                      kTop + kHeight + 16, v);
        out << buf;
        std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" text-anchor=\"end\">%.2f</text>\n",
                      kLeft - 6, sy(v) + 4, v);
        out << buf;
    }
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"470\" font-size=\"13\" text-anchor=\"middle\">PLAF</text>\n",
                  kLeft + kWidth / 2);
    out << buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"16\" y=\"%.1f\" font-size=\"13\" text-anchor=\"middle\" "
                  "transform=\"rotate(-90 16 %.1f)\">WSAF</text>\n",
                  kTop + kHeight / 2, kTop + kHeight / 2);
    out << buf;
    out << "<text x=\"320\" y=\"20\" font-size=\"13\" text-anchor=\"middle\">";
    for (char c : fig.sample_id) {
        switch (c) {
            case '<': out << "&lt;"; break;
            case '>': out << "&gt;"; break;
            case '&': out << "&amp;"; break;
            default: out << c;
        }
    }
    out << "</text>\n";

    out << "<g fill=\"#1f77b4\" fill-opacity=\"0.5\">\n";
    for (const auto& pt : fig.observed) {
        std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"1.6\"/>\n", sx(pt.plaf), sy(pt.wsaf));
        out << buf;
    }
    out << "</g>\n<g fill=\"#ff7f0e\" fill-opacity=\"0.35\">\n";
    for (const auto& pt : fig.simulated) {
        std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"1.2\"/>\n", sx(pt.plaf), sy(pt.wsaf));
        out << buf;
    }
    out << "</g>\n<g fill=\"none\" stroke=\"#d62728\" stroke-width=\"1\">\n";
    for (const auto& line : fig.bands) {
        out << "<polyline points=\"";
        for (std::size_t i = 0; i < line.plaf.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", i ? " " : "", sx(line.plaf[i]), sy(line.wsaf[i]));
            out << buf;
        }
        out << "\"/>\n";
    }
    out << "</g>\n</svg>\n";
}

}  // namespace strainmix::cli
