#pragma once

// Accuracy evaluation against annotated template/target pairs: box overlap,
// success-rate curves and their area (mAP), best-of-k mode scoring.

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bbs/box.hpp"
#include "bbs/errors.hpp"
#include "bbs/features.hpp"
#include "bbs/matcher.hpp"

namespace bbs {

/// Intersection over union of two pixel rectangles.
inline double overlap(const Box& a, const Box& b) {
    const std::int64_t ix = std::max<std::int64_t>(0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
    const std::int64_t iy = std::max<std::int64_t>(0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
    const std::int64_t inter = ix * iy;
    const std::int64_t uni = a.area() + b.area() - inter;
    return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

/// {0, 0.01, ..., 1}.
inline std::vector<double> default_thresholds() {
    std::vector<double> t(101);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i) / 100.0;
    return t;
}

/// Fraction of overlaps above each threshold. At threshold 1 the count is of
/// perfect overlaps, so an all-perfect run scores 1 everywhere.
inline std::vector<double> success_curve(const std::vector<double>& overlaps, const std::vector<double>& thresholds) {
    if (overlaps.empty()) throw ConfigError("success curve needs at least one overlap");
    if (thresholds.empty()) throw ConfigError("success curve needs at least one threshold");
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (thresholds[i] < 0.0 || thresholds[i] > 1.0) throw ConfigError("thresholds must lie in [0,1]");
        if (i > 0 && thresholds[i] <= thresholds[i - 1]) throw ConfigError("thresholds must be increasing");
    }
    std::vector<double> curve;
    curve.reserve(thresholds.size());
    for (double t : thresholds) {
        std::size_t n = 0;
        for (double o : overlaps) n += (t < 1.0 ? o > t : o >= 1.0) ? 1 : 0;
        curve.push_back(static_cast<double>(n) / static_cast<double>(overlaps.size()));
    }
    return curve;
}

/// Trapezoidal area under a success curve.
inline double map_score(const std::vector<double>& thresholds, const std::vector<double>& curve) {
    if (thresholds.size() != curve.size() || curve.empty()) throw ConfigError("curve and thresholds differ in size");
    double area = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i)
        area += 0.5 * (curve[i] + curve[i - 1]) * (thresholds[i] - thresholds[i - 1]);
    return area;
}

/// Largest overlap between any of the results and the ground truth.
inline double best_overlap(const std::vector<MatchResult>& results, const Box& gt) {
    double best = 0.0;
    for (const auto& r : results) best = std::max(best, overlap(r.box, gt));
    return best;
}

struct PairAnnotation {
    std::string id;
    std::filesystem::path template_image;
    std::filesystem::path target_image;
    Box template_box;
    Box gt_box;
};

namespace detail {

inline Box box_from_json(const nlohmann::json& j, const std::string& field) {
    if (!j.contains(field)) throw IoError("annotation is missing '" + field + "'");
    const auto& b = j.at(field);
    Box box;
    if (b.is_array() && b.size() == 4) {
        box = {b[0].get<std::int64_t>(), b[1].get<std::int64_t>(), b[2].get<std::int64_t>(), b[3].get<std::int64_t>()};
    } else if (b.is_object()) {
        box = {b.at("x").get<std::int64_t>(), b.at("y").get<std::int64_t>(), b.at("w").get<std::int64_t>(),
               b.at("h").get<std::int64_t>()};
    } else {
        throw IoError("annotation field '" + field + "' must be {x,y,w,h} or [x,y,w,h]");
    }
    if (box.w < 1 || box.h < 1) throw IoError("annotation field '" + field + "' has a non-positive size");
    return box;
}

}  // namespace detail

inline nlohmann::json to_json(const Box& b) { return {{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}}; }

/// Parses JSON Lines annotations. Relative image paths are resolved against `base_dir`.
inline std::vector<PairAnnotation> parse_annotations(std::istream& in, const std::filesystem::path& base_dir,
                                                     const std::string& name = "<annotations>") {
    std::vector<PairAnnotation> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto j = nlohmann::json::parse(line);
            PairAnnotation a;
            a.id = j.contains("id") ? j.at("id").get<std::string>() : std::to_string(lineno);
            auto resolve = [&](const std::string& field) {
                if (!j.contains(field)) throw IoError("annotation is missing '" + field + "'");
                std::filesystem::path p = j.at(field).get<std::string>();
                return p.is_absolute() ? p : base_dir / p;
            };
            a.template_image = resolve("template_image");
            a.target_image = resolve("target_image");
            a.template_box = detail::box_from_json(j, "template_box");
            a.gt_box = detail::box_from_json(j, "gt_box");
            out.push_back(std::move(a));
        } catch (const nlohmann::json::exception& e) {
            throw IoError(name + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const IoError& e) {
            throw IoError(name + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

inline std::vector<PairAnnotation> load_annotations(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return parse_annotations(in, path.parent_path(), path.string());
}

enum class ColorSpace { RGB, HSV };

/// Method names accepted by the harness.
inline const std::vector<std::string>& method_names() {
    static const std::vector<std::string> names = {"bbs", "ssd", "sad", "ncc", "hm", "bds"};
    return names;
}

inline std::optional<BaselineKind> baseline_for(const std::string& method) {
    if (method == "ssd") return BaselineKind::SSD;
    if (method == "sad") return BaselineKind::SAD;
    if (method == "ncc") return BaselineKind::NCC;
    if (method == "hm") return BaselineKind::HM_Chi2;
    if (method == "bds") return BaselineKind::BDS;
    return std::nullopt;
}

inline void validate_methods(const std::vector<std::string>& methods) {
    for (const auto& m : methods)
        if (std::find(method_names().begin(), method_names().end(), m) == method_names().end()) {
            std::string valid;
            for (const auto& n : method_names()) valid += (valid.empty() ? "" : ", ") + n;
            throw ConfigError("unknown method '" + m + "' (valid: " + valid + ")");
        }
}

struct EvalOptions {
    MatcherConfig matcher;
    ColorSpace color_space = ColorSpace::HSV;
    std::size_t kmodes = 3;
    std::optional<std::size_t> nms_rx;
    std::optional<std::size_t> nms_ry;
    std::size_t hm_bins = 8;
};

/// Loads a PPM (converted to the requested color space) or a BFM feature map.
inline FeatureGrid load_input(const std::filesystem::path& path, ColorSpace cs) {
    if (path.extension() == ".bfm") return load_feature_grid(path);
    FeatureGrid g = load_image(path);
    return cs == ColorSpace::HSV ? rgb_to_hsv(g) : g;
}

inline std::vector<MatchResult> run_method(const std::string& method, const FeatureGrid& templ,
                                           const FeatureGrid& target, const EvalOptions& opt) {
    LikelihoodMap map;
    if (method == "bbs") {
        map = match(templ, target, opt.matcher);
    } else {
        auto kind = baseline_for(method);
        if (!kind) throw ConfigError("unknown method '" + method + "'");
        map = match_baseline(templ, target, opt.matcher, Baseline{*kind, opt.hm_bins});
    }
    return top_modes(map, opt.kmodes, opt.nms_rx, opt.nms_ry);
}

struct PairResult {
    std::string id;
    std::string method;
    double top1_overlap = 0.0;
    double best_of_k_overlap = 0.0;
    std::optional<std::string> error;
};

struct MethodSummary {
    std::string method;
    std::vector<double> curve_top1;
    std::vector<double> curve_best_of_k;
    double map_top1 = 0.0;
    double map_best_of_k = 0.0;
    std::size_t pairs = 0;
    std::size_t failures = 0;
};

struct EvalReport {
    std::vector<double> thresholds;
    std::size_t kmodes = 1;
    std::vector<PairResult> pairs;
    std::vector<MethodSummary> methods;
};

/// Runs every method on every pair. A pair that cannot be loaded or matched is
/// recorded as a failure with zero overlap and evaluation continues.
inline EvalReport evaluate_pairs(const std::vector<PairAnnotation>& annotations,
                                 const std::vector<std::string>& methods, const EvalOptions& opt) {
    validate_methods(methods);
    EvalReport report;
    report.thresholds = default_thresholds();
    report.kmodes = opt.kmodes;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> overlaps;

    for (const auto& a : annotations) {
        std::optional<FeatureGrid> templ, target;
        std::string load_error;
        try {
            templ = load_input(a.template_image, opt.color_space)
                        .crop(static_cast<std::size_t>(a.template_box.y), static_cast<std::size_t>(a.template_box.x),
                              static_cast<std::size_t>(a.template_box.h), static_cast<std::size_t>(a.template_box.w));
            target = load_input(a.target_image, opt.color_space);
        } catch (const std::exception& e) {
            load_error = e.what();
        }
        for (const auto& m : methods) {
            PairResult r{a.id, m, 0.0, 0.0, std::nullopt};
            if (!load_error.empty()) {
                r.error = load_error;
            } else {
                try {
                    auto results = run_method(m, *templ, *target, opt);
                    r.top1_overlap = results.empty() ? 0.0 : overlap(results.front().box, a.gt_box);
                    r.best_of_k_overlap = best_overlap(results, a.gt_box);
                } catch (const std::exception& e) {
                    r.error = e.what();
                }
            }
            overlaps[m].first.push_back(r.top1_overlap);
            overlaps[m].second.push_back(r.best_of_k_overlap);
            report.pairs.push_back(std::move(r));
        }
    }

    for (const auto& m : methods) {
        MethodSummary s;
        s.method = m;
        s.pairs = annotations.size();
        for (const auto& r : report.pairs)
            if (r.method == m && r.error) ++s.failures;
        if (!annotations.empty()) {
            s.curve_top1 = success_curve(overlaps[m].first, report.thresholds);
            s.curve_best_of_k = success_curve(overlaps[m].second, report.thresholds);
            s.map_top1 = map_score(report.thresholds, s.curve_top1);
            s.map_best_of_k = map_score(report.thresholds, s.curve_best_of_k);
        }
        report.methods.push_back(std::move(s));
    }
    return report;
}

inline std::string report_csv(const EvalReport& report) {
    std::ostringstream out;
    out << "pair_id,method,top1_overlap,best_of_k_overlap,error\n";
    for (const auto& r : report.pairs) {
        std::string err = r.error.value_or("");
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        out << r.id << ',' << r.method << ',' << r.top1_overlap << ',' << r.best_of_k_overlap << ',' << err << '\n';
    }
    return out.str();
}

inline nlohmann::json report_summary(const EvalReport& report) {
    nlohmann::json methods = nlohmann::json::object();
    for (const auto& s : report.methods)
        methods[s.method] = {{"map_top1", s.map_top1},
                             {"map_best_of_k", s.map_best_of_k},
                             {"pairs", s.pairs},
                             {"failures", s.failures}};
    return {{"kmodes", report.kmodes}, {"thresholds", report.thresholds.size()}, {"methods", methods}};
}

}  // namespace bbs
