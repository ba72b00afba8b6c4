#include "porogen/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "porogen/train.hpp"

namespace porogen::report {

namespace {

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

std::string g17(double v) { return fmt("%.17g", v); }

nlohmann::json curves_json(std::span<const morph::CurveStatistic> curves) {
    auto arr = nlohmann::json::array();
    for (const auto& c : curves)
        arr.push_back({{"kind", to_string(c.kind)},
                       {"phase", to_string(c.phase)},
                       {"direction", to_string(c.direction)},
                       {"values", c.values}});
    return arr;
}

} // namespace

double mean(std::span<const double> v) {
    if (v.empty()) throw ValueError("mean of an empty sample");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_std(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::string format_mean_std(double m, double s, int decimals) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.*f ± %.*f", decimals, m, decimals, s);
    return buf;
}

double diversity_score(std::span<const BinaryImage> images, const ConditionalInput& cond) {
    if (images.size() < 2) return 0.0;
    const auto mask = cond.mask().data();
    std::vector<std::size_t> unknown;
    for (std::size_t p = 0; p < mask.size(); ++p)
        if (!mask[p]) unknown.push_back(p);
    if (unknown.empty()) return 0.0;
    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < images.size(); ++a)
        for (std::size_t b = a + 1; b < images.size(); ++b) {
            if (!images[a].same_shape(cond.mask()) || !images[b].same_shape(cond.mask()))
                throw ValueError("realization and mask differ in shape");
            std::size_t diff = 0;
            for (auto p : unknown) diff += images[a].data()[p] != images[b].data()[p];
            total += static_cast<double>(diff);
            ++pairs;
        }
    return total / static_cast<double>(pairs) / static_cast<double>(unknown.size());
}

EvalReport evaluate(std::span<const BinaryImage> images, std::span<const BinaryImage> raw,
                    const ConditionalInput& cond, const BinaryImage* target, const EvalOptions& opts) {
    if (images.empty()) throw ValueError("no realizations to evaluate");
    if (!raw.empty() && raw.size() != images.size()) throw ValueError("raw and final realization counts differ");
    for (const auto& img : images)
        if (!img.same_shape(cond.mask())) throw ValueError("realization and condition differ in shape");
    if (target && !target->same_shape(cond.mask())) throw ValueError("target and condition differ in shape");

    int r_max = opts.r_max > 0 ? opts.r_max : std::min(cond.width(), cond.height()) / 2;
    r_max = std::min(r_max, morph::max_lag(images.front(), opts.direction));

    EvalReport r;
    for (const auto& img : images) r.porosities.push_back(porosity(img));
    r.porosity_mean = mean(r.porosities);
    r.porosity_std = sample_std(r.porosities);

    std::vector<std::vector<morph::CurveStatistic>> per_kind(3);
    for (const auto& img : images) {
        auto suite = morph::descriptor_suite(img, opts.phase, opts.direction, r_max);
        for (std::size_t k = 0; k < suite.size(); ++k) per_kind[k].push_back(std::move(suite[k]));
    }
    for (const auto& curves : per_kind) r.mean_curves.push_back(morph::average_curves(curves));

    if (target) {
        r.target_porosity = porosity(*target);
        r.target_curves = morph::descriptor_suite(*target, opts.phase, opts.direction, r_max);
    }

    if (cond.mask().informed_count() > 0) {
        for (const auto& img : raw.empty() ? images : raw) r.fidelity.push_back(train::hard_data_fidelity(img, cond));
        r.fidelity_mean = mean(r.fidelity);
    }
    r.diversity = diversity_score(images, cond);
    r.unknown_pixels = static_cast<std::int64_t>(cond.mask().size() - cond.mask().informed_count());
    return r;
}

double max_curve_gap(std::span<const morph::CurveStatistic> target, std::span<const morph::CurveStatistic> mean) {
    double gap = 0.0;
    for (const auto& t : target)
        for (const auto& m : mean)
            if (t.compatible_with(m))
                for (std::size_t i = 0; i < t.values.size(); ++i)
                    gap = std::max(gap, std::abs(t.values[i] - m.values[i]));
    return gap;
}

nlohmann::json to_json(const EvalReport& r) {
    nlohmann::json j;
    j["realizations"] = r.porosities.size();
    j["porosities"] = r.porosities;
    j["porosity_mean"] = r.porosity_mean;
    j["porosity_std"] = r.porosity_std;
    j["porosity_summary"] = format_mean_std(r.porosity_mean, r.porosity_std);
    j["target_porosity"] = r.target_porosity ? nlohmann::json(*r.target_porosity) : nlohmann::json(nullptr);
    j["mean_curves"] = curves_json(r.mean_curves);
    j["target_curves"] = curves_json(r.target_curves);
    j["max_curve_gap"] = r.target_curves.empty() ? nlohmann::json(nullptr)
                                                 : nlohmann::json(max_curve_gap(r.target_curves, r.mean_curves));
    j["hard_data_fidelity"] = r.fidelity;
    j["hard_data_fidelity_mean"] = r.fidelity_mean;
    j["diversity"] = r.diversity;
    j["unknown_pixels"] = r.unknown_pixels;
    return j;
}

std::string summary(const EvalReport& r) {
    std::ostringstream out;
    out << "porosity: " << format_mean_std(r.porosity_mean, r.porosity_std) << " (Mean ± Standard Deviation, n="
        << r.porosities.size() << ")\n";
    if (r.target_porosity) out << "target porosity: " << fmt("%.3f", *r.target_porosity) << '\n';
    if (!r.fidelity.empty()) out << "hard-data fidelity: " << fmt("%.4f", r.fidelity_mean) << '\n';
    out << "diversity: " << fmt("%.4f", r.diversity) << '\n';
    if (!r.target_curves.empty())
        for (const auto& t : r.target_curves)
            for (const auto& m : r.mean_curves)
                if (t.compatible_with(m))
                    out << to_string(t.kind) << " max |target - average|: "
                        << fmt("%.4f", max_curve_gap(std::span(&t, 1), std::span(&m, 1))) << '\n';
    return out.str();
}

void write_curves_csv(std::ostream& out, const EvalReport& r) {
    out << "series,kind,phase,direction,r,value\n";
    auto emit = [&](const char* series, std::span<const morph::CurveStatistic> curves) {
        for (const auto& c : curves)
            for (std::size_t i = 0; i < c.values.size(); ++i)
                out << series << ',' << to_string(c.kind) << ',' << to_string(c.phase) << ','
                    << to_string(c.direction) << ',' << i << ',' << g17(c.values[i]) << '\n';
    };
    emit("target", r.target_curves);
    emit("mean", r.mean_curves);
}

void write_porosity_csv(std::ostream& out, const EvalReport& r) {
    out << "realization,porosity,fidelity\n";
    for (std::size_t i = 0; i < r.porosities.size(); ++i)
        out << i << ',' << g17(r.porosities[i]) << ',' << (i < r.fidelity.size() ? g17(r.fidelity[i]) : "") << '\n';
}

namespace {

constexpr double kPanelW = 360, kPanelH = 300;
constexpr double kLeft = 56, kRight = 16, kTop = 36, kBottom = 44;

std::string coord(double v) { return fmt("%.2f", v); }

struct Axes {
    double x0, y0, w, h, r_max, y_max;
    double px(double r) const { return x0 + w * (r_max > 0 ? r / r_max : 0.0); }
    double py(double v) const { return y0 + h - h * std::clamp(v / y_max, 0.0, 1.0); }
};

void polyline(std::ostream& out, const Axes& ax, const std::vector<double>& values, const char* style) {
    out << "<polyline fill=\"none\" " << style << " points=\"";
    for (std::size_t i = 0; i < values.size(); ++i)
        out << (i ? " " : "") << coord(ax.px(static_cast<double>(i))) << ',' << coord(ax.py(values[i]));
    out << "\"/>\n";
}

const morph::CurveStatistic* find_kind(std::span<const morph::CurveStatistic> curves, morph::Descriptor k) {
    for (const auto& c : curves)
        if (c.kind == k) return &c;
    return nullptr;
}

} // namespace

std::string render_svg(const PlotSeries& s) {
    const std::vector<morph::Descriptor> kinds{morph::Descriptor::S2, morph::Descriptor::L, morph::Descriptor::C2};
    std::vector<morph::Descriptor> present;
    for (auto k : kinds)
        if (find_kind(s.target, k) || find_kind(s.average, k)) present.push_back(k);
    if (present.empty()) throw ValueError("nothing to plot");

    const double width = kPanelW * static_cast<double>(present.size());
    const double height = kPanelH + 28;
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << coord(width) << "\" height=\"" << coord(height)
        << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    for (std::size_t p = 0; p < present.size(); ++p) {
        const auto kind = present[p];
        const auto* target = find_kind(s.target, kind);
        const auto* average = find_kind(s.average, kind);
        const auto& ref = target ? *target : *average;
        double y_max = 0.0;
        auto grow = [&](const morph::CurveStatistic* c) {
            if (c)
                for (double v : c->values) y_max = std::max(y_max, v);
        };
        grow(target);
        grow(average);
        for (const auto& real : s.realizations) grow(find_kind(real, kind));
        y_max = y_max > 0.0 ? std::ceil(y_max * 10.0) / 10.0 : 1.0;
        const Axes ax{kPanelW * static_cast<double>(p) + kLeft, kTop, kPanelW - kLeft - kRight,
                      kPanelH - kTop - kBottom, static_cast<double>(ref.values.size() - 1), y_max};

        std::string title = std::string(to_string(kind)) + " (" + std::string(to_string(ref.phase)) + ", " +
                            std::string(to_string(ref.direction)) + ")";
        if (target && average) title += "  max gap " + fmt("%.4f", max_curve_gap(std::span(target, 1), std::span(average, 1)));
        out << "<text x=\"" << coord(ax.x0 + ax.w / 2) << "\" y=\"20\" text-anchor=\"middle\">" << title
            << "</text>\n";
        out << "<rect x=\"" << coord(ax.x0) << "\" y=\"" << coord(ax.y0) << "\" width=\"" << coord(ax.w)
            << "\" height=\"" << coord(ax.h) << "\" fill=\"none\" stroke=\"black\"/>\n";
        for (int t = 0; t <= 5; ++t) {
            const double r = ax.r_max * t / 5.0;
            const double x = ax.px(r);
            out << "<line x1=\"" << coord(x) << "\" y1=\"" << coord(ax.y0 + ax.h) << "\" x2=\"" << coord(x)
                << "\" y2=\"" << coord(ax.y0 + ax.h + 4) << "\" stroke=\"black\"/>\n";
            out << "<text x=\"" << coord(x) << "\" y=\"" << coord(ax.y0 + ax.h + 16) << "\" text-anchor=\"middle\">"
                << fmt("%.0f", r) << "</text>\n";
            const double v = y_max * t / 5.0;
            const double y = ax.py(v);
            out << "<line x1=\"" << coord(ax.x0 - 4) << "\" y1=\"" << coord(y) << "\" x2=\"" << coord(ax.x0)
                << "\" y2=\"" << coord(y) << "\" stroke=\"black\"/>\n";
            out << "<text x=\"" << coord(ax.x0 - 6) << "\" y=\"" << coord(y + 4) << "\" text-anchor=\"end\">"
                << fmt("%.2f", v) << "</text>\n";
        }
        out << "<text x=\"" << coord(ax.x0 + ax.w / 2) << "\" y=\"" << coord(ax.y0 + ax.h + 32)
            << "\" text-anchor=\"middle\">r (pixels)</text>\n";

        for (const auto& real : s.realizations)
            if (const auto* c = find_kind(real, kind))
                polyline(out, ax, c->values, "stroke=\"#bbbbbb\" stroke-width=\"0.8\"");
        if (average) polyline(out, ax, average->values, "stroke=\"#1f5fbf\" stroke-width=\"2\"");
        if (target) polyline(out, ax, target->values, "stroke=\"#d62728\" stroke-width=\"2\" stroke-dasharray=\"6,3\"");
    }

    const double ly = kPanelH + 12;
    auto legend = [&](double x, const char* color, const char* dash, const char* label) {
        out << "<line x1=\"" << coord(x) << "\" y1=\"" << coord(ly) << "\" x2=\"" << coord(x + 24) << "\" y2=\""
            << coord(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"" << dash << "/>\n";
        out << "<text x=\"" << coord(x + 30) << "\" y=\"" << coord(ly + 4) << "\">" << label << "</text>\n";
    };
    legend(kLeft, "#d62728", " stroke-dasharray=\"6,3\"", "target");
    legend(kLeft + 100, "#bbbbbb", "", "realizations");
    legend(kLeft + 220, "#1f5fbf", "", "average");
    out << "</svg>\n";
    return out.str();
}

} // namespace porogen::report
