#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "vad/binary_io.hpp"
#include "vad/error.hpp"
#include "vad/pipeline.hpp"

namespace vad {

namespace fs = std::filesystem;

namespace {

struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::istringstream is(io::read_text(path));
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> row;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(cell);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

// Static line chart; axes span the data range.
std::string line_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                       const std::vector<Series>& series) {
    constexpr double W = 640, H = 420, L = 70, R = 180, T = 40, B = 60;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series) {
        for (const auto& [x, y] : s.points) {
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            x0 = std::min(x0, x), x1 = std::max(x1, x);
            y0 = std::min(y0, y), y1 = std::max(y1, y);
        }
    }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x0 -= 0.5, x1 += 0.5;
    if (y1 == y0) y0 -= 0.05, y1 += 0.05;
    const auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    const auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

    std::ostringstream os;
    os << std::setprecision(6);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title) << "</text>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = x0 + (x1 - x0) * i / 4, yv = y0 + (y1 - y0) * i / 4;
        os << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">" << xv << "</text>\n";
        os << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << yv << "</text>\n";
    }
    os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">" << escape(xlabel) << "</text>\n";
    os << "<text x=\"18\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << (T + H - B) / 2
       << ")\">" << escape(ylabel) << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const char* color = colors[k % 8];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (const auto& [x, y] : series[k].points) {
            if (std::isfinite(x) && std::isfinite(y)) os << px(x) << ',' << py(y) << ' ';
        }
        os << "\"/>\n";
        const double ly = T + 16 * static_cast<double>(k);
        os << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 30 << "\" y2=\"" << ly << "\" stroke=\""
           << color << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << W - R + 35 << "\" y=\"" << ly + 4 << "\">" << escape(series[k].name) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::string fmt(double v, int digits = 4) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

}  // namespace

std::vector<fs::path> cmd_report(const std::vector<fs::path>& inputs, const fs::path& out_dir) {
    if (inputs.empty()) throw ConfigError("report needs at least one input");
    fs::create_directories(out_dir);
    std::vector<fs::path> written;
    std::ostringstream md;
    md << "# Evaluation summary\n\n";

    std::vector<std::pair<std::string, EvalReport>> reports;
    std::vector<fs::path> sweeps, rocs;
    for (const auto& p : inputs) {
        if (!fs::exists(p)) throw DataError("report input not found: " + p.string());
        if (p.extension() == ".json") {
            reports.emplace_back(p.stem().string(), report_from_json(io::read_text(p)));
        } else if (p.extension() == ".csv") {
            const auto rows = read_csv(p);
            if (rows.empty()) throw DataError(p.string() + ": empty table");
            if (rows[0].size() >= 4 && rows[0][0] == "p_mean") {
                sweeps.push_back(p);
            } else if (rows[0] == std::vector<std::string>{"threshold", "fpr", "tpr"}) {
                rocs.push_back(p);
            } else {
                throw DataError(p.string() + ": not a sweep or ROC table");
            }
        } else {
            throw DataError("unsupported report input: " + p.string());
        }
    }

    if (!reports.empty()) {
        md << "| run | frame AUC | clips | frames | mean MSE normal | mean MSE anomalous | flagged | fingerprint |\n";
        md << "|---|---|---|---|---|---|---|---|\n";
        for (const auto& [name, r] : reports) {
            md << "| " << name << " | " << fmt(r.frame_auc) << " | " << r.clips << " | " << r.frames << " | "
               << fmt(r.mean_mse_normal) << " | " << fmt(r.mean_mse_anomalous) << " | " << fmt(r.flagged_fraction, 3)
               << " | `" << r.config_fingerprint << "` |\n";
        }
        md << '\n';
        std::vector<Series> bars{{"frame AUC", {}}};
        for (std::size_t i = 0; i < reports.size(); ++i) bars[0].points.emplace_back(static_cast<double>(i), reports[i].second.frame_auc);
        const auto svg = out_dir / "auc_by_run.svg";
        io::write_text(svg, line_chart("Frame AUC by run", "run index", "AUC", bars));
        written.push_back(svg);
        md << "![AUC by run](auc_by_run.svg)\n\n";
    }

    for (std::size_t s = 0; s < sweeps.size(); ++s) {
        const auto rows = read_csv(sweeps[s]);
        std::map<std::string, Series> by_cell;
        md << "## Sweep " << sweeps[s].filename().string() << "\n\n| p_mean | p_std | start_t | AUC |\n|---|---|---|---|\n";
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const auto& row = rows[i];
            if (row.size() < 4) throw DataError(sweeps[s].string() + ": short row");
            md << "| " << row[0] << " | " << row[1] << " | " << row[2] << " | " << fmt(std::stod(row[3])) << " |\n";
            const auto key = "P_mean=" + row[0] + " P_std=" + row[1];
            by_cell[key].name = key;
            by_cell[key].points.emplace_back(std::stod(row[2]), std::stod(row[3]));
        }
        std::vector<Series> series;
        for (auto& [k, v] : by_cell) {
            std::sort(v.points.begin(), v.points.end());
            series.push_back(v);
        }
        const auto name = "sweep_" + std::to_string(s) + ".svg";
        io::write_text(out_dir / name, line_chart("AUC vs start index", "start_t", "AUC", series));
        written.push_back(out_dir / name);
        md << "\n![sweep](" << name << ")\n\n";
    }

    for (std::size_t r = 0; r < rocs.size(); ++r) {
        const auto rows = read_csv(rocs[r]);
        Series curve{rocs[r].stem().string(), {}};
        for (std::size_t i = 1; i < rows.size(); ++i) curve.points.emplace_back(std::stod(rows[i][1]), std::stod(rows[i][2]));
        const auto name = "roc_" + std::to_string(r) + ".svg";
        io::write_text(out_dir / name, line_chart("ROC", "false positive rate", "true positive rate", {curve}));
        written.push_back(out_dir / name);
        md << "![roc](" << name << ")\n\n";
    }

    io::write_text(out_dir / "summary.md", md.str());
    written.insert(written.begin(), out_dir / "summary.md");
    return written;
}

}  // namespace vad
