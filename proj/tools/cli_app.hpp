#pragma once

// Command-line front end: match, simulate, eval, bench.
//
// Exit codes: 0 success, 2 bad flags or configuration, 3 I/O failure,
// 4 dimension mismatch.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bbs/bbs.hpp"

namespace bbs::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitDimension = 4;

struct MatchFlags {
    std::string template_path;
    std::string image_path;
    std::string measure = "color-hsv";
    std::size_t k = 0;
    double lambda = -1.0;
    std::size_t stride = 0;
    std::string algorithm = "auto";
    std::size_t kmodes = 3;
    std::optional<std::size_t> nms_rx, nms_ry;
    std::vector<std::int64_t> template_box;
    bool no_window_norm = false;
    std::string out = ".";
};

struct SimulateFlags {
    std::string experiment;
    std::uint64_t seed = 1;
    std::size_t trials = 0;
    std::size_t n = 0;
    std::size_t samples = 0;
    std::vector<double> mus = {0, 1, 2, 3, 4};
    std::vector<double> sigmas = {0.5, 1, 2, 3};
    std::string out = "simulate.csv";
};

struct EvalFlags {
    std::string annotations;
    std::string methods = "bbs,ssd,sad,ncc,hm,bds";
    std::string measure = "color-hsv";
    std::size_t k = 0;
    double lambda = -1.0;
    std::size_t stride = 0;
    std::size_t kmodes = 3;
    std::string out = ".";
};

struct BenchFlags {
    std::string sizes = "128x128:24x24";
    std::size_t repeats = 5;
    std::size_t k = 2;
    std::uint64_t seed = 1;
    std::string out;
};

inline std::size_t default_threads() {
    if (const char* env = std::getenv("BBS_THREADS")) {
        try {
            long v = std::stol(env);
            if (v > 0) return static_cast<std::size_t>(v);
        } catch (...) {
        }
    }
    return 1;
}

inline std::string fmt_double(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep))
        if (!item.empty()) out.push_back(item);
    return out;
}

/// Measure, patch size and color handling for a measure name.
struct MeasureSetup {
    MatcherConfig matcher;
    ColorSpace color_space = ColorSpace::HSV;
    bool feature_grid = false;
};

inline MeasureSetup setup_measure(const std::string& name, std::size_t k, double lambda, std::size_t stride,
                                  std::size_t threads) {
    MeasureSetup s;
    if (name == "color-hsv" || name == "color-rgb") {
        s.color_space = name == "color-hsv" ? ColorSpace::HSV : ColorSpace::RGB;
        s.matcher.measure = Measure::color(lambda < 0 ? 0.25 : lambda);
        s.matcher.patch_size = k == 0 ? 3 : k;
    } else if (name == "feature-grid") {
        s.feature_grid = true;
        s.matcher.measure = Measure::similarity(lambda < 0 ? 1.0 : lambda);
        s.matcher.patch_size = k == 0 ? 1 : k;
        s.matcher.normalize_windows = true;
    } else {
        throw ConfigError("unknown measure '" + name + "' (valid: color-hsv, color-rgb, feature-grid)");
    }
    s.matcher.stride = stride;
    s.matcher.threads = threads;
    return s;
}

inline FeatureGrid load_for(const MeasureSetup& s, const std::string& path) {
    if (s.feature_grid) return load_feature_grid(path);
    return load_input(path, s.color_space);
}

inline void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string());
}

inline int cmd_match(const MatchFlags& f, std::size_t threads, std::ostream& out) {
    MeasureSetup s = setup_measure(f.measure, f.k, f.lambda, f.stride, threads);
    if (f.no_window_norm) s.matcher.normalize_windows = false;
    if (f.algorithm == "naive") {
        s.matcher.algorithm = Algorithm::Naive;
    } else if (f.algorithm == "cached") {
        s.matcher.algorithm = Algorithm::Cached;
    } else if (f.algorithm == "auto") {
        s.matcher.algorithm = s.matcher.normalize_windows ? Algorithm::Naive : Algorithm::Cached;
    } else {
        throw ConfigError("unknown algorithm '" + f.algorithm + "' (valid: naive, cached, auto)");
    }
    if (s.matcher.algorithm == Algorithm::Cached && s.matcher.normalize_windows)
        throw ConfigError("--algorithm cached cannot be combined with per-window normalization "
                          "(pass --no-window-norm or use --algorithm naive)");

    FeatureGrid templ = load_for(s, f.template_path);
    FeatureGrid image = load_for(s, f.image_path);
    if (!f.template_box.empty()) {
        if (f.template_box.size() != 4 || f.template_box[0] < 0 || f.template_box[1] < 0 || f.template_box[2] < 1 ||
            f.template_box[3] < 1)
            throw ConfigError("--template-box expects x,y,w,h with non-negative origin and positive size");
        templ = templ.crop(static_cast<std::size_t>(f.template_box[1]), static_cast<std::size_t>(f.template_box[0]),
                           static_cast<std::size_t>(f.template_box[3]), static_cast<std::size_t>(f.template_box[2]));
    }

    LikelihoodMap map = match(templ, image, s.matcher);
    auto modes = top_modes(map, f.kmodes, f.nms_rx, f.nms_ry);

    nlohmann::json matches = nlohmann::json::array();
    for (const auto& m : modes) matches.push_back({{"rank", m.rank}, {"box", to_json(m.box)}, {"score", m.score}});
    nlohmann::json doc = {{"template", f.template_path},
                          {"image", f.image_path},
                          {"measure", f.measure},
                          {"patch_size", s.matcher.patch_size},
                          {"lambda", s.matcher.measure.lambda},
                          {"stride", s.matcher.effective_stride()},
                          {"window_normalization", s.matcher.normalize_windows},
                          {"map", {{"rows", map.rows}, {"cols", map.cols}}},
                          {"matches", matches}};

    const std::filesystem::path dir = f.out;
    ensure_dir(dir);
    save_feature_grid(map.to_grid(), dir / "likelihood.bfm");
    write_file_atomic(dir / "likelihood.pgm", encode_pgm(map));
    write_file_atomic(dir / "matches.json", doc.dump(2) + "\n");
    if (!modes.empty()) {
        const auto& b = modes.front().box;
        out << "best match x=" << b.x << " y=" << b.y << " w=" << b.w << " h=" << b.h
            << " score=" << modes.front().score << "\n";
    }
    return kExitOk;
}

inline int cmd_simulate(const SimulateFlags& f, std::size_t threads, std::ostream& out) {
    using namespace bbs::stats;
    std::ostringstream csv;
    const std::string echo = f.experiment + "," + std::to_string(f.seed) + "," + kRngName;

    if (f.experiment == "fig4") {
        const std::size_t n = f.n ? f.n : 100;
        const std::size_t samples = f.samples ? f.samples : 200000;
        csv << "experiment,seed,rng,n,samples,mu,sigma,e_bbp,e_bbs,e_bbs_stderr\n";
        double best = -1.0, best_mu = 0.0, best_sigma = 0.0;
        for (double mu : f.mus)
            for (double sigma : f.sigmas) {
                SimConfig cfg{Distribution1D::gaussian(0.0, 1.0), Distribution1D::gaussian(mu, sigma), n, 1, f.seed,
                              threads};
                Estimate bbp = integral_ebbp(cfg, samples);
                double ebbs = bbp.mean * static_cast<double>(n);
                csv << echo << ',' << n << ',' << samples << ',' << mu << ',' << sigma << ',' << fmt_double(bbp.mean)
                    << ',' << fmt_double(ebbs) << ',' << fmt_double(bbp.std_error * static_cast<double>(n)) << '\n';
                if (ebbs > best) {
                    best = ebbs;
                    best_mu = mu;
                    best_sigma = sigma;
                }
            }
        out << "argmax E[BBS] at mu=" << best_mu << " sigma=" << best_sigma << " (" << best << ")\n";
    } else if (f.experiment == "fig5") {
        const std::size_t trials = f.trials ? f.trials : 500;
        std::vector<std::size_t> sizes = f.n ? std::vector<std::size_t>{f.n} : std::vector<std::size_t>{10, 100, 1000, 10000};
        auto dp = lemma_mixture_p();
        auto dq = lemma_mixture_q();
        csv << "experiment,seed,rng,n,trials,p,analytic,empirical,stderr,abs_diff\n";
        for (std::size_t n : sizes) {
            double worst = 0.0;
            for (int i = 0; i <= 40; ++i) {
                double p = -8.0 + 0.4 * i;
                double a = lemma1_analytic(dp, dq, p);
                Estimate e = lemma1_empirical(dp, dq, p, n, trials, f.seed, threads);
                worst = std::max(worst, std::abs(e.mean - a));
                csv << echo << ',' << n << ',' << trials << ',' << p << ',' << fmt_double(a) << ','
                    << fmt_double(e.mean) << ',' << fmt_double(e.std_error) << ',' << fmt_double(std::abs(e.mean - a))
                    << '\n';
            }
            out << "N=" << n << " max |empirical - analytic| = " << worst << "\n";
        }
    } else if (f.experiment == "theorem1") {
        const std::size_t n = f.n ? f.n : 10000;
        const std::size_t trials = f.trials ? f.trials : 100;
        struct Case {
            std::string name;
            Distribution1D p, q;
        };
        std::vector<Case> cases = {
            {"lemma-mixtures", lemma_mixture_p(), lemma_mixture_q()},
            {"same-gaussian", Distribution1D::gaussian(0, 1), Distribution1D::gaussian(0, 1)},
            {"shifted-gaussian", Distribution1D::gaussian(0, 1), Distribution1D::gaussian(1, 1)},
            {"wider-gaussian", Distribution1D::gaussian(0, 1), Distribution1D::gaussian(0, 2)},
        };
        csv << "experiment,seed,rng,n,trials,case,chi2,limit,integral_form,empirical,stderr,abs_diff\n";
        for (const auto& c : cases) {
            double chi2 = chi_square(c.p, c.q);
            double limit = 0.5 - chi2 / 4.0;
            double integral = theorem1_integral(c.p, c.q);
            Estimate e = empirical_ebbs(SimConfig{c.p, c.q, n, trials, f.seed, threads});
            csv << echo << ',' << n << ',' << trials << ',' << c.name << ',' << fmt_double(chi2) << ','
                << fmt_double(limit) << ',' << fmt_double(integral) << ',' << fmt_double(e.mean) << ','
                << fmt_double(e.std_error) << ',' << fmt_double(std::abs(e.mean - limit)) << '\n';
            out << c.name << ": empirical " << e.mean << " vs limit " << limit << " |diff| "
                << std::abs(e.mean - limit) << "\n";
        }
    } else if (f.experiment == "ssd_sad") {
        const std::size_t samples = f.samples ? f.samples : 1000000;
        csv << "experiment,seed,rng,samples,mu,sigma,closed_ssd,mc_ssd,closed_sad,mc_sad\n";
        for (double mu : f.mus)
            for (double sigma : f.sigmas) {
                auto mc = monte_carlo_ssd_sad(mu, sigma, samples, f.seed);
                csv << echo << ',' << samples << ',' << mu << ',' << sigma << ',' << fmt_double(expected_ssd(mu, sigma))
                    << ',' << fmt_double(mc.ssd.mean) << ',' << fmt_double(expected_sad(mu, sigma)) << ','
                    << fmt_double(mc.sad.mean) << '\n';
            }
    } else {
        throw ConfigError("unknown experiment '" + f.experiment + "' (valid: fig4, fig5, theorem1, ssd_sad)");
    }
    write_file_atomic(f.out, csv.str());
    return kExitOk;
}

inline int cmd_eval(const EvalFlags& f, std::size_t threads, std::ostream& out) {
    auto methods = split(f.methods, ',');
    if (methods.empty()) throw ConfigError("--methods is empty");
    validate_methods(methods);
    MeasureSetup s = setup_measure(f.measure, f.k, f.lambda, f.stride, threads);
    if (s.matcher.normalize_windows) s.matcher.algorithm = Algorithm::Naive;
    EvalOptions opt;
    opt.matcher = s.matcher;
    opt.color_space = s.color_space;
    opt.kmodes = f.kmodes;
    auto annotations = load_annotations(f.annotations);
    EvalReport report = evaluate_pairs(annotations, methods, opt);

    const std::filesystem::path dir = f.out;
    ensure_dir(dir);
    write_file_atomic(dir / "report.csv", report_csv(report));
    write_file_atomic(dir / "summary.json", report_summary(report).dump(2) + "\n");
    for (const auto& m : report.methods)
        out << m.method << ": mAP top-1 " << m.map_top1 << ", best-of-" << report.kmodes << " " << m.map_best_of_k
            << " (" << m.failures << " failures)\n";
    return kExitOk;
}

struct BenchRow {
    std::size_t image_w, image_h, templ_w, templ_h, k;
    double naive_ms, cached_ms;
    bool identical;
};

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
}

/// Times naive and cached BBS on a random image with a template cut from it.
inline BenchRow bench_case(std::size_t iw, std::size_t ih, std::size_t tw, std::size_t th, std::size_t k,
                           std::size_t repeats, std::uint64_t seed, std::size_t threads) {
    auto rng = stats::make_rng(seed, 0);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    FeatureGrid image(ih, iw, 3);
    for (auto& v : image.data()) v = u(rng);
    FeatureGrid templ = image.crop((ih - th) / 2, (iw - tw) / 2, th, tw);
    MatcherConfig cfg;
    cfg.patch_size = k;
    cfg.threads = threads;
    std::vector<double> naive_t, cached_t;
    bool identical = true;
    for (std::size_t r = 0; r < std::max<std::size_t>(1, repeats); ++r) {
        auto t0 = std::chrono::steady_clock::now();
        auto a = match_naive(templ, image, cfg);
        auto t1 = std::chrono::steady_clock::now();
        auto b = match_cached(templ, image, cfg);
        auto t2 = std::chrono::steady_clock::now();
        naive_t.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        cached_t.push_back(std::chrono::duration<double, std::milli>(t2 - t1).count());
        identical = identical && a == b;
    }
    return {iw, ih, tw, th, k, median(naive_t), median(cached_t), identical};
}

inline int cmd_bench(const BenchFlags& f, std::size_t threads, std::ostream& out) {
    std::ostringstream csv;
    csv << "image,template,k,repeats,naive_ms,cached_ms,speedup,identical\n";
    for (const auto& spec : split(f.sizes, ',')) {
        auto parts = split(spec, ':');
        if (parts.size() != 2) throw ConfigError("--sizes entries look like 128x128:24x24, got '" + spec + "'");
        auto dims = [&](const std::string& s) {
            auto wh = split(s, 'x');
            if (wh.size() != 2) throw ConfigError("bad size '" + s + "'");
            try {
                return std::pair<std::size_t, std::size_t>(std::stoul(wh[0]), std::stoul(wh[1]));
            } catch (const std::exception&) {
                throw ConfigError("bad size '" + s + "'");
            }
        };
        auto [iw, ih] = dims(parts[0]);
        auto [tw, th] = dims(parts[1]);
        BenchRow r = bench_case(iw, ih, tw, th, f.k, f.repeats, f.seed, threads);
        csv << iw << 'x' << ih << ',' << tw << 'x' << th << ',' << f.k << ',' << f.repeats << ',' << r.naive_ms << ','
            << r.cached_ms << ',' << r.naive_ms / r.cached_ms << ',' << (r.identical ? "yes" : "no") << '\n';
    }
    if (!f.out.empty()) write_file_atomic(f.out, csv.str());
    out << csv.str();
    return kExitOk;
}

/// Parses argv and dispatches to a subcommand. Diagnostics go to `err`.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Best-Buddies Similarity template matching"};
    app.require_subcommand(1);
    app.fallthrough();
    std::size_t threads = default_threads();
    app.add_option("--threads", threads, "Worker threads (default: $BBS_THREADS or 1)")->check(CLI::PositiveNumber);

    MatchFlags mf;
    auto* match_cmd = app.add_subcommand("match", "Locate a template in an image");
    match_cmd->add_option("--template", mf.template_path, "Template image (PPM) or feature map (BFM)")->required();
    match_cmd->add_option("--image", mf.image_path, "Query image (PPM) or feature map (BFM)")->required();
    match_cmd->add_option("--measure", mf.measure, "color-hsv, color-rgb or feature-grid");
    match_cmd->add_option("--k", mf.k, "Patch size (default 3 for color, 1 for feature grids)");
    match_cmd->add_option("--lambda", mf.lambda, "Spatial weight (default 0.25 color, 1.0 feature grid)");
    match_cmd->add_option("--stride", mf.stride, "Window stride (default k for color, 1 for feature grids)");
    match_cmd->add_option("--algorithm", mf.algorithm, "naive, cached or auto");
    match_cmd->add_option("--kmodes", mf.kmodes, "Number of modes to report")->check(CLI::PositiveNumber);
    match_cmd->add_option("--nms-rx", mf.nms_rx, "Suppression radius in x (pixels)");
    match_cmd->add_option("--nms-ry", mf.nms_ry, "Suppression radius in y (pixels)");
    match_cmd->add_option("--template-box", mf.template_box, "Crop x,y,w,h of the template image")->delimiter(',');
    match_cmd->add_flag("--no-window-norm", mf.no_window_norm, "Skip per-window normalization of feature grids");
    match_cmd->add_option("--out", mf.out, "Output directory");

    SimulateFlags sf;
    auto* sim_cmd = app.add_subcommand("simulate", "Run a statistical experiment and write CSV");
    sim_cmd->add_option("--experiment", sf.experiment, "fig4, fig5, theorem1 or ssd_sad")->required();
    sim_cmd->add_option("--seed", sf.seed, "Random seed");
    sim_cmd->add_option("--trials", sf.trials, "Trials per point (0: experiment default)");
    sim_cmd->add_option("--n", sf.n, "Set size (0: experiment default)");
    sim_cmd->add_option("--samples", sf.samples, "Monte-Carlo samples (fig4, ssd_sad)");
    sim_cmd->add_option("--mus", sf.mus, "Means of Q (fig4, ssd_sad)")->delimiter(',');
    sim_cmd->add_option("--sigmas", sf.sigmas, "Sigmas of Q (fig4, ssd_sad)")->delimiter(',');
    sim_cmd->add_option("--out", sf.out, "Output CSV path");

    EvalFlags ef;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate methods on annotated pairs");
    eval_cmd->add_option("--annotations", ef.annotations, "JSON Lines annotation file")->required();
    eval_cmd->add_option("--methods", ef.methods, "Comma-separated: bbs,ssd,sad,ncc,hm,bds");
    eval_cmd->add_option("--measure", ef.measure, "color-hsv, color-rgb or feature-grid");
    eval_cmd->add_option("--k", ef.k, "Patch size");
    eval_cmd->add_option("--lambda", ef.lambda, "Spatial weight");
    eval_cmd->add_option("--stride", ef.stride, "Window stride");
    eval_cmd->add_option("--kmodes", ef.kmodes, "Modes per pair")->check(CLI::PositiveNumber);
    eval_cmd->add_option("--out", ef.out, "Output directory");

    BenchFlags bf;
    auto* bench_cmd = app.add_subcommand("bench", "Time naive against cached BBS");
    bench_cmd->add_option("--sizes", bf.sizes, "Comma-separated WxH:wxh cases");
    bench_cmd->add_option("--repeats", bf.repeats, "Runs per case (median reported)");
    bench_cmd->add_option("--k", bf.k, "Patch size")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--seed", bf.seed, "Random seed");
    bench_cmd->add_option("--out", bf.out, "Output CSV path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (*match_cmd) return cmd_match(mf, threads, out);
        if (*sim_cmd) return cmd_simulate(sf, threads, out);
        if (*eval_cmd) return cmd_eval(ef, threads, out);
        if (*bench_cmd) return cmd_bench(bf, threads, out);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const DimensionError& e) {
        err << "error: " << e.what() << "\n";
        return kExitDimension;
    }
    return kExitUsage;
}

}  // namespace bbs::cli
