#include "vcenergy/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "vcenergy/errors.hpp"

namespace vcenergy {

namespace {

void check_pair(std::span<const double> x, std::span<const double> y, std::size_t min_n = 2) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("series lengths differ: " + std::to_string(x.size()) + " vs " +
                                    std::to_string(y.size()));
    }
    if (x.size() < min_n) {
        throw std::invalid_argument("need at least " + std::to_string(min_n) + " points");
    }
}

double mean(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

} // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y);
    const double mx = mean(x);
    const double my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw std::invalid_argument("correlation undefined for a constant series");
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) {
            ++j;
        }
        // positions i..j (0-based) share rank mean((i+1)..(j+1))
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            ranks[order[k]] = r;
        }
        i = j + 1;
    }
    return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y);
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    return pearson(rx, ry);
}

double kendall(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y);
    const std::size_t n = x.size();
    // Integer pair counts keep the result exact for any n this is used with.
    long long concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const int sx = sign(x[j] - x[i]);
            const int sy = sign(y[j] - y[i]);
            if (sx == 0) {
                ++ties_x;
            }
            if (sy == 0) {
                ++ties_y;
            }
            if (sx * sy > 0) {
                ++concordant;
            } else if (sx * sy < 0) {
                ++discordant;
            }
        }
    }
    const long long n0 = static_cast<long long>(n) * static_cast<long long>(n - 1) / 2;
    const double denom = std::sqrt(static_cast<double>(n0 - ties_x) * static_cast<double>(n0 - ties_y));
    if (denom == 0.0) {
        throw std::invalid_argument("Kendall tau-b undefined when a series is entirely tied");
    }
    return std::clamp(static_cast<double>(concordant - discordant) / denom, -1.0, 1.0);
}

FitResult fit_linear(std::span<const double> sw, std::span<const double> hw) {
    check_pair(sw, hw, 3);
    for (double v : hw) {
        if (!(v > 0.0)) {
            throw std::invalid_argument("relative error needs strictly positive HW energies");
        }
    }
    const double mx = mean(sw);
    const double my = mean(hw);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < sw.size(); ++i) {
        const double dx = sw[i] - mx;
        const double dy = hw[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) {
        throw std::invalid_argument("SW energies have zero variance");
    }
    FitResult f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0, rel = 0.0;
    for (std::size_t i = 0; i < sw.size(); ++i) {
        const double predicted = f.slope * sw[i] + f.intercept;
        ss_res += (hw[i] - predicted) * (hw[i] - predicted);
        rel += std::abs(predicted - hw[i]) / hw[i];
    }
    f.r_squared = syy == 0.0 ? 1.0 : std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
    f.epsilon = rel / static_cast<double>(sw.size());
    return f;
}

MeterPair pair_meters(const std::vector<MeterSpec>& meters) {
    MeterPair p;
    for (const auto& m : meters) {
        auto& slot = m.scope == MeterScope::wall ? p.hw : p.sw;
        if (!slot.empty()) {
            throw Error("more than one " + std::string(to_string(m.scope)) +
                        "-scope meter; name the pair explicitly");
        }
        slot = m.meter_id;
    }
    if (p.hw.empty() || p.sw.empty()) {
        throw Error("need one wall-scope (HW) and one chip-scope (SW) meter");
    }
    return p;
}

GroupAnalysis correlate_groups(std::span<const MeasurementRow> rows, const MeterPair& meters) {
    struct Pair {
        std::optional<double> hw, sw;
        Codec codec;
        Process process;
    };
    std::map<std::string, Pair> by_job;
    std::vector<std::string> order;
    for (const auto& r : rows) {
        const auto& m = r.measurement;
        if (m.meter_id != meters.hw && m.meter_id != meters.sw) {
            continue;
        }
        auto [it, inserted] = by_job.try_emplace(m.job_id, Pair{{}, {}, r.params.codec, r.params.process});
        if (inserted) {
            order.push_back(m.job_id);
        }
        (m.meter_id == meters.hw ? it->second.hw : it->second.sw) = m.energy;
    }

    GroupAnalysis out;
    std::map<std::pair<Codec, Process>, std::pair<std::vector<double>, std::vector<double>>> groups;
    for (const auto& job : order) {
        const auto& p = by_job[job];
        if (!p.hw || !p.sw) {
            out.warnings.push_back("job '" + job + "' has no " + (p.hw ? "SW" : "HW") +
                                   " measurement; skipped");
            continue;
        }
        auto& g = groups[{p.codec, p.process}];
        g.first.push_back(*p.sw);
        g.second.push_back(*p.hw);
    }

    for (auto codec : {Codec::x264, Codec::x265}) {
        for (auto process : {Process::encode, Process::decode}) {
            const std::string name = std::string(to_string(codec)) + "-" + std::string(to_string(process));
            auto it = groups.find({codec, process});
            const std::size_t n = it == groups.end() ? 0 : it->second.first.size();
            if (n < 3) {
                out.warnings.push_back("group " + name + " has " + std::to_string(n) +
                                       " paired points (< 3); skipped");
                continue;
            }
            const auto& [sw, hw] = it->second;
            try {
                GroupResult g;
                g.correlation = {codec, process, pearson(sw, hw), spearman(sw, hw), kendall(sw, hw), n};
                g.fit = fit_linear(sw, hw);
                out.groups.push_back(g);
            } catch (const std::invalid_argument& e) {
                out.warnings.push_back("group " + name + " skipped: " + e.what());
            }
        }
    }
    return out;
}

void write_table2_csv(std::ostream& out, const GroupAnalysis& analysis) {
    out << "codec,process,pcc,scc,kcc,r2,epsilon\n";
    for (const auto& g : analysis.groups) {
        out << to_string(g.correlation.codec) << ',' << to_string(g.correlation.process) << ','
            << format_double(g.correlation.pcc) << ',' << format_double(g.correlation.scc) << ','
            << format_double(g.correlation.kcc) << ',' << format_double(g.fit.r_squared) << ','
            << format_double(g.fit.epsilon) << '\n';
    }
}

void write_fits_csv(std::ostream& out, const GroupAnalysis& analysis) {
    out << "codec,process,n_points,slope,intercept,r2,epsilon\n";
    for (const auto& g : analysis.groups) {
        out << to_string(g.correlation.codec) << ',' << to_string(g.correlation.process) << ','
            << g.correlation.n_points << ',' << format_double(g.fit.slope) << ','
            << format_double(g.fit.intercept) << ',' << format_double(g.fit.r_squared) << ','
            << format_double(g.fit.epsilon) << '\n';
    }
}

void write_scatter_csv(std::ostream& out, std::span<const MeasurementRow> rows, Process process) {
    out << "bitrate_kbps,energy_j,codec,resolution,meter\n";
    for (const auto& r : rows) {
        if (r.params.process != process) {
            continue;
        }
        out << format_double(r.bitrate_kbps) << ',' << format_double(r.measurement.energy) << ','
            << to_string(r.params.codec) << ',' << to_string(r.params.resolution()) << ','
            << r.measurement.meter_id << '\n';
    }
}

void write_summary(std::ostream& out, std::span<const MeasurementRow> rows,
                   const GroupAnalysis& analysis, const MeterPair& meters) {
    struct Totals {
        std::size_t count = 0, reliable = 0;
        double energy = 0.0;
    };
    std::map<std::string, Totals> per_meter;
    for (const auto& r : rows) {
        const std::string key = r.measurement.meter_id + " " + std::string(to_string(r.params.process));
        auto& t = per_meter[key];
        ++t.count;
        t.reliable += r.measurement.reliable ? 1 : 0;
        t.energy += r.measurement.energy;
    }
    out << "HW meter: " << meters.hw << "   SW meter: " << meters.sw << "\n\n";
    out << "measurements (meter process): count, reliable, mean energy [J]\n";
    out << std::fixed << std::setprecision(2);
    for (const auto& [key, t] : per_meter) {
        out << "  " << std::left << std::setw(20) << key << std::right << std::setw(6) << t.count
            << std::setw(6) << t.reliable << std::setw(14) << t.energy / static_cast<double>(t.count)
            << '\n';
    }
    out << "\nHW vs SW          PCC    SCC    KCC     R2   eps[%]      slope   intercept[J]   n\n";
    for (const auto& g : analysis.groups) {
        const std::string name = std::string(to_string(g.correlation.codec)) + " - " +
                                 std::string(to_string(g.correlation.process));
        out << std::left << std::setw(16) << name << std::right << std::setprecision(2)
            << std::setw(6) << g.correlation.pcc << std::setw(7) << g.correlation.scc
            << std::setw(7) << g.correlation.kcc << std::setw(7) << g.fit.r_squared
            << std::setw(9) << 100.0 * g.fit.epsilon << std::setprecision(4) << std::setw(11)
            << g.fit.slope << std::setprecision(2) << std::setw(15) << g.fit.intercept
            << std::setw(4) << g.correlation.n_points << '\n';
    }
    for (const auto& w : analysis.warnings) {
        out << "warning: " << w << '\n';
    }
}

} // namespace vcenergy
