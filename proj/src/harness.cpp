#include "addsr/harness.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <zlib.h>

#include "addsr/codec.hpp"
#include "addsr/parallel.hpp"
#include "addsr/sampler.hpp"

namespace addsr {

namespace {

struct ImageEval {
    double psnr = 0, ssim = 0, hf = 0;
};

ImageEval eval_output(const Tensor& out_unit, const ImageU8& hr) {
    const ImageU8 out = u8_from_unit(out_unit);
    ImageEval e;
    e.psnr = psnr(out, hr);
    e.ssim = ssim(out, hr);
    e.hf = hf_energy(out);
    return e;
}

EvalStats reduce(const std::vector<ImageEval>& evals) {
    EvalStats s;
    s.n = static_cast<int>(evals.size());
    for (const auto& e : evals) {
        s.psnr += e.psnr;
        s.ssim += e.ssim;
        s.hf += e.hf;
    }
    if (s.n > 0) {
        s.psnr /= s.n;
        s.ssim /= s.n;
        s.hf /= s.n;
    }
    return s;
}

} // namespace

EvalStats eval_psr(const Denoiser& net, const std::vector<TrainPair>& pairs, int steps,
                   double blend_r, const StudentTimestepSet& sts, const NoiseSchedule& sched,
                   std::uint64_t seed, int scale) {
    require(!pairs.empty(), "eval_psr: empty pair set");
    std::vector<ImageEval> evals(pairs.size());
    const Rng base(seed);
    parallel_for(static_cast<int>(pairs.size()), [&](int i) {
        Rng rng = base.fork(static_cast<std::uint64_t>(i));
        auto [out, chain] = psr_sample(net, pairs[static_cast<std::size_t>(i)].x_lr, steps, blend_r,
                                       sts, sched, rng, scale);
        evals[static_cast<std::size_t>(i)] = eval_output(out, pairs[static_cast<std::size_t>(i)].hr_u8);
    });
    return reduce(evals);
}

EvalStats eval_baseline(const Denoiser& teacher, const std::vector<TrainPair>& pairs, int steps,
                        const NoiseSchedule& sched, std::uint64_t seed, int scale) {
    require(!pairs.empty(), "eval_baseline: empty pair set");
    std::vector<ImageEval> evals(pairs.size());
    const Rng base(seed);
    parallel_for(static_cast<int>(pairs.size()), [&](int i) {
        Rng rng = base.fork(static_cast<std::uint64_t>(i));
        const Tensor out =
            baseline_sample(teacher, pairs[static_cast<std::size_t>(i)].x_lr, steps, sched, rng, scale);
        evals[static_cast<std::size_t>(i)] = eval_output(out, pairs[static_cast<std::size_t>(i)].hr_u8);
    });
    return reduce(evals);
}

TrainState run_distill(const Denoiser& teacher, const DiscriminatorArch& disc_arch,
                       const std::vector<TrainPair>& pairs, const NoiseSchedule& sched,
                       const StudentTimestepSet& sts, const DistillRunConfig& cfg) {
    require(!pairs.empty(), "run_distill: empty pair set");
    Denoiser teacher_copy = teacher;
    TrainState state = make_train_state(teacher_copy, disc_arch, sched, sts, cfg.trainer, cfg.seed);
    std::optional<TrainLog> log;
    if (!cfg.log_path.empty()) log.emplace(cfg.log_path);

    const double lr0 = cfg.trainer.lr;
    const double lr1 = (cfg.lr_final >= 0.0) ? cfg.lr_final : lr0;
    Rng rng(cfg.seed);
    for (int step = 0; step < cfg.steps; ++step) {
        if (lr1 != lr0 && cfg.steps > 1) {
            const double frac = static_cast<double>(step) / (cfg.steps - 1);
            state.opt_g.lr = lr1 + 0.5 * (lr0 - lr1) * (1.0 + std::cos(3.141592653589793 * frac));
        }
        Batch batch;
        for (int b = 0; b < cfg.trainer.batch; ++b) {
            const int idx = rng.uniform_int(0, static_cast<int>(pairs.size()) - 1);
            batch.x0.push_back(pairs[static_cast<std::size_t>(idx)].x0);
            batch.x_lr.push_back(pairs[static_cast<std::size_t>(idx)].x_lr);
        }
        const LossReport rep = distill_step(state, batch, cfg.wp, cfg.trainer, rng);
        if (log) log->append(state.step, rep);
        if (cfg.print_every > 0 && (step + 1) % cfg.print_every == 0)
            std::printf("distill step %d/%d dis %.5f g_adv %.4f d_loss %.4f\n", step + 1, cfg.steps,
                        rep.dis, rep.g_adv, rep.d_loss);
    }
    return state;
}

std::vector<SweepRow> run_sweep(const SweepConfig& cfg, const std::string& param,
                                const std::vector<double>& values) {
    require(cfg.teacher && cfg.train_pairs && cfg.eval_pairs, "run_sweep: missing inputs");
    require(!values.empty(), "run_sweep: empty value list");
    const bool is_train_param =
        (param == "mu" || param == "nu" || param == "gamma" || param == "kappa");
    const bool is_infer_param = (param == "blend_r" || param == "steps");
    if (!is_train_param && !is_infer_param) throw ConfigError("run_sweep: unknown param " + param);

    std::vector<SweepRow> rows;
    const int max_steps = cfg.sts.num_steps();

    if (is_train_param) {
        for (const double v : values) {
            WeightingParams wp = cfg.base_wp;
            if (param == "mu") wp.mu = v;
            else if (param == "nu") wp.nu = v;
            else if (param == "gamma") wp.gamma = v;
            else wp.kappa = v;
            DistillRunConfig rc;
            rc.steps = cfg.distill_steps;
            rc.trainer = cfg.trainer;
            rc.wp = wp;
            rc.seed = cfg.seed;
            TrainState st = run_distill(*cfg.teacher, cfg.disc_arch, *cfg.train_pairs, cfg.sched,
                                        cfg.sts, rc);
            for (int steps = 1; steps <= max_steps; ++steps) {
                const EvalStats e = eval_psr(st.student, *cfg.eval_pairs, steps, 1.0, cfg.sts,
                                             cfg.sched, cfg.eval_seed, cfg.trainer.scale);
                rows.push_back({v, steps, e.psnr, e.ssim, e.hf});
            }
        }
        return rows;
    }

    // Inference knobs: one training run, vary the knob at evaluation time.
    DistillRunConfig rc;
    rc.steps = cfg.distill_steps;
    rc.trainer = cfg.trainer;
    rc.wp = cfg.base_wp;
    rc.seed = cfg.seed;
    TrainState st = run_distill(*cfg.teacher, cfg.disc_arch, *cfg.train_pairs, cfg.sched, cfg.sts, rc);
    if (param == "blend_r") {
        for (const double r : values)
            for (int steps = 1; steps <= max_steps; ++steps) {
                const EvalStats e = eval_psr(st.student, *cfg.eval_pairs, steps, r, cfg.sts, cfg.sched,
                                             cfg.eval_seed, cfg.trainer.scale);
                rows.push_back({r, steps, e.psnr, e.ssim, e.hf});
            }
    } else {
        for (const double v : values) {
            const int steps = static_cast<int>(v);
            require(steps >= 1 && steps <= max_steps, "run_sweep: steps value out of range");
            const EvalStats e = eval_psr(st.student, *cfg.eval_pairs, steps, 1.0, cfg.sts, cfg.sched,
                                         cfg.eval_seed, cfg.trainer.scale);
            rows.push_back({v, steps, e.psnr, e.ssim, e.hf});
        }
    }
    return rows;
}

void write_sweep_csv(const std::string& path, const std::string& param,
                     const std::vector<SweepRow>& rows) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("write_sweep_csv: cannot open " + path);
    std::fprintf(f, "%s,steps,psnr,ssim,hf_energy\n", param.c_str());
    for (const auto& r : rows)
        std::fprintf(f, "%.17g,%d,%.17g,%.17g,%.17g\n", r.value, r.steps, r.psnr, r.ssim, r.hf);
    std::fclose(f);
}

void print_sweep_table(const std::string& param, const std::vector<SweepRow>& rows) {
    std::printf("%10s %6s %10s %8s %10s\n", param.c_str(), "steps", "psnr", "ssim", "hf");
    for (const auto& r : rows)
        std::printf("%10.4g %6d %10.3f %8.4f %10.5f\n", r.value, r.steps, r.psnr, r.ssim, r.hf);
}

WeightingPlotData weighting_plot_data(const WeightingParams& wp, const NoiseSchedule& sched,
                                      const StudentTimestepSet& sts, int t_stride) {
    WeightingPlotData d;
    const int n = sts.num_steps();
    d.ratio.resize(static_cast<std::size_t>(n));
    for (int t = 1; t <= sched.T; t += t_stride) {
        d.ts.push_back(t);
        d.baseline.push_back(wp.lambda / std::sqrt(sched.alpha_bar(t)));
        for (int p = 1; p <= n; ++p)
            d.ratio[static_cast<std::size_t>(p) - 1].push_back(
                weighting_ratio(sts.anchor_for_step(p), t, sched, sts, wp));
    }
    return d;
}

namespace {

void draw_line(ImageU8& img, int x0, int y0, int x1, int y1, std::uint8_t r, std::uint8_t g,
               std::uint8_t b) {
    const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    int x = x0, y = y0;
    while (true) {
        if (x >= 0 && x < img.w && y >= 0 && y < img.h) {
            img.at(y, x, 0) = r;
            img.at(y, x, 1) = g;
            img.at(y, x, 2) = b;
        }
        if (x == x1 && y == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) { err += dy; x += sx; }
        if (e2 <= dx) { err += dx; y += sy; }
    }
}

void render_weighting_png(const WeightingPlotData& d, const NoiseSchedule& sched,
                          const std::string& path) {
    const int W = 800, H = 500, ml = 60, mb = 40, mt = 20, mr = 20;
    ImageU8 img(H, W);
    std::fill(img.px.begin(), img.px.end(), 255);

    double ymax = 0.0;
    for (const auto& curve : d.ratio)
        for (double v : curve) ymax = std::max(ymax, v);
    for (double v : d.baseline) ymax = std::max(ymax, v);
    if (ymax <= 0.0) ymax = 1.0;

    const auto px = [&](double t) {
        return ml + static_cast<int>((W - ml - mr - 1) * (t - 1.0) / std::max(1.0, sched.T - 1.0));
    };
    const auto py = [&](double v) {
        return H - mb - static_cast<int>((H - mt - mb - 1) * v / ymax);
    };

    draw_line(img, ml, mt, ml, H - mb, 0, 0, 0);
    draw_line(img, ml, H - mb, W - mr, H - mb, 0, 0, 0);

    const std::uint8_t colors[5][3] = {
        {200, 40, 40}, {40, 140, 40}, {40, 60, 200}, {200, 140, 20}, {120, 120, 120}};
    for (std::size_t p = 0; p < d.ratio.size(); ++p) {
        const auto& c = colors[p % 4];
        for (std::size_t i = 1; i < d.ts.size(); ++i)
            draw_line(img, px(d.ts[i - 1]), py(d.ratio[p][i - 1]), px(d.ts[i]), py(d.ratio[p][i]),
                      c[0], c[1], c[2]);
    }
    for (std::size_t i = 1; i < d.ts.size(); ++i)
        draw_line(img, px(d.ts[i - 1]), py(d.baseline[i - 1]), px(d.ts[i]), py(d.baseline[i]),
                  colors[4][0], colors[4][1], colors[4][2]);
    save_png(path, img);
}

} // namespace

WeightingPlotData plot_weighting(const WeightingParams& wp, const NoiseSchedule& sched,
                                 const StudentTimestepSet& sts, const std::string& out_prefix) {
    const WeightingPlotData d = weighting_plot_data(wp, sched, sts);
    std::FILE* f = std::fopen((out_prefix + ".csv").c_str(), "w");
    if (!f) throw std::runtime_error("plot_weighting: cannot open " + out_prefix + ".csv");
    std::fprintf(f, "t,p,ratio,baseline_ratio\n");
    for (std::size_t i = 0; i < d.ts.size(); ++i)
        for (std::size_t p = 0; p < d.ratio.size(); ++p)
            std::fprintf(f, "%d,%zu,%.17g,%.17g\n", d.ts[i], p + 1, d.ratio[p][i], d.baseline[i]);
    std::fclose(f);
    render_weighting_png(d, sched, out_prefix + ".png");
    return d;
}

WeightingPlotData read_weighting_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_weighting_csv: cannot open " + path);
    std::string line;
    std::getline(f, line); // header
    WeightingPlotData d;
    while (std::getline(f, line)) {
        int t = 0;
        std::size_t p = 0;
        double ratio = 0, base = 0;
        if (std::sscanf(line.c_str(), "%d,%zu,%lg,%lg", &t, &p, &ratio, &base) != 4)
            throw std::runtime_error("read_weighting_csv: bad row: " + line);
        if (p == 1) {
            d.ts.push_back(t);
            d.baseline.push_back(base);
        }
        if (d.ratio.size() < p) d.ratio.resize(p);
        d.ratio[p - 1].push_back(ratio);
    }
    return d;
}

namespace {

std::string find_git_head() {
    namespace fs = std::filesystem;
    fs::path dir = fs::current_path();
    for (int depth = 0; depth < 10; ++depth) {
        const fs::path head = dir / ".git" / "HEAD";
        if (fs::exists(head)) {
            std::ifstream f(head);
            std::string content;
            std::getline(f, content);
            if (content.rfind("ref: ", 0) == 0) {
                const fs::path ref = dir / ".git" / content.substr(5);
                if (fs::exists(ref)) {
                    std::ifstream rf(ref);
                    std::string sha;
                    std::getline(rf, sha);
                    return sha;
                }
                return "";
            }
            return content;
        }
        if (!dir.has_parent_path() || dir.parent_path() == dir) break;
        dir = dir.parent_path();
    }
    return "";
}

} // namespace

void write_run_manifest(const std::string& dir, const nlohmann::json& config, std::uint64_t seed) {
    std::filesystem::create_directories(dir);
    nlohmann::json m;
    m["config"] = config;
    const std::string dumped = config.dump();
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(dumped.data()), static_cast<uInt>(dumped.size()));
    m["config_crc32"] = static_cast<std::uint32_t>(crc);
    m["seed"] = seed;
    m["codec"] = codec_version_string();
    const std::string head = find_git_head();
    if (!head.empty()) m["git_head"] = head;
    std::ofstream f(dir + "/manifest.json");
    if (!f) throw std::runtime_error("write_run_manifest: cannot open " + dir + "/manifest.json");
    f << m.dump(2) << "\n";
}

void write_eval_csv(const std::string& path, const std::vector<PerImageEval>& rows) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("write_eval_csv: cannot open " + path);
    std::fprintf(f, "image,psnr,ssim,hf_energy\n");
    double sp = 0, ss = 0, sh = 0;
    for (const auto& r : rows) {
        std::fprintf(f, "%s,%.17g,%.17g,%.17g\n", r.name.c_str(), r.psnr, r.ssim, r.hf);
        sp += r.psnr;
        ss += r.ssim;
        sh += r.hf;
    }
    const double n = rows.empty() ? 1.0 : static_cast<double>(rows.size());
    std::fprintf(f, "aggregate_mean,%.17g,%.17g,%.17g\n", sp / n, ss / n, sh / n);
    std::fclose(f);
}

TrainLog::TrainLog(const std::string& path) {
    const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
    f_ = std::fopen(path.c_str(), "a");
    if (!f_) throw std::runtime_error("TrainLog: cannot open " + path);
    if (fresh) std::fprintf(f_, "step,dis_loss,g_adv,d_loss,ratio_sample\n");
}

TrainLog::~TrainLog() {
    if (f_) std::fclose(f_);
}

void TrainLog::append(std::uint64_t step, const LossReport& rep) {
    std::fprintf(f_, "%llu,%.9g,%.9g,%.9g,%.9g\n", static_cast<unsigned long long>(step), rep.dis,
                 rep.g_adv, rep.d_loss, rep.ratio_sample);
    std::fflush(f_);
}

} // namespace addsr
