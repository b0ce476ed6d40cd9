#include "addsr/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>

#include <zlib.h>

#include "addsr/codec.hpp"

namespace addsr {

namespace {

constexpr char kMagic[8] = {'A', 'D', 'S', 'R', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

struct NamedArray {
    std::string name;
    const std::vector<float>* data;
};

std::uint32_t crc_of(const std::vector<float>& v) {
    uLong crc = crc32(0L, Z_NULL, 0);
    return static_cast<std::uint32_t>(
        crc32(crc, reinterpret_cast<const Bytef*>(v.data()), static_cast<uInt>(v.size() * sizeof(float))));
}

void write_u32(std::ofstream& f, std::uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); }
void write_u64(std::ofstream& f, std::uint64_t v) { f.write(reinterpret_cast<const char*>(&v), 8); }

std::uint32_t read_u32(std::ifstream& f) {
    std::uint32_t v = 0;
    f.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
std::uint64_t read_u64(std::ifstream& f) {
    std::uint64_t v = 0;
    f.read(reinterpret_cast<char*>(&v), 8);
    return v;
}

void write_archive(const std::string& path, nlohmann::json meta, const std::vector<NamedArray>& arrays) {
    nlohmann::json manifest = nlohmann::json::array();
    for (const auto& a : arrays)
        manifest.push_back({{"name", a.name}, {"count", a.data->size()}, {"crc32", crc_of(*a.data)}});
    meta["arrays"] = manifest;
    meta["codec"] = codec_version_string();
    meta["byte_order"] = "little";
    const std::string meta_str = meta.dump();

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("checkpoint: cannot open for writing: " + path);
    f.write(kMagic, 8);
    write_u32(f, kVersion);
    write_u64(f, meta_str.size());
    f.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));
    for (const auto& a : arrays)
        f.write(reinterpret_cast<const char*>(a.data->data()),
                static_cast<std::streamsize>(a.data->size() * sizeof(float)));
    if (!f) throw std::runtime_error("checkpoint: write failed: " + path);
}

struct Archive {
    nlohmann::json meta;
    std::map<std::string, std::vector<float>> arrays;
};

Archive read_archive(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot open: " + path);
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    const std::uint32_t version = read_u32(f);
    if (version != kVersion)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    const std::uint64_t meta_len = read_u64(f);
    std::string meta_str(meta_len, '\0');
    f.read(meta_str.data(), static_cast<std::streamsize>(meta_len));
    if (!f) throw std::runtime_error("checkpoint: truncated metadata in " + path);

    Archive ar;
    ar.meta = nlohmann::json::parse(meta_str);
    for (const auto& entry : ar.meta.at("arrays")) {
        const std::string name = entry.at("name");
        const std::uint64_t count = entry.at("count");
        std::vector<float> data(count);
        f.read(reinterpret_cast<char*>(data.data()),
               static_cast<std::streamsize>(count * sizeof(float)));
        if (!f)
            throw std::runtime_error("checkpoint: archive member missing or truncated: " + name);
        if (crc_of(data) != entry.at("crc32").get<std::uint32_t>())
            throw std::runtime_error("checkpoint: archive member corrupt (crc mismatch): " + name);
        ar.arrays.emplace(name, std::move(data));
    }
    return ar;
}

void collect_net(std::vector<NamedArray>& out, const std::string& prefix, ParamRefs<float> params) {
    for (auto* p : params) out.push_back({prefix + p->name, &p->w});
}

void fill_net(const Archive& ar, const std::string& prefix, ParamRefs<float> params) {
    for (auto* p : params) {
        const auto it = ar.arrays.find(prefix + p->name);
        if (it == ar.arrays.end())
            throw std::runtime_error("checkpoint: missing array: " + prefix + p->name);
        if (it->second.size() != p->w.size())
            throw std::runtime_error("checkpoint: array size mismatch: " + prefix + p->name);
        p->w = it->second;
    }
}

void collect_adam(std::vector<NamedArray>& out, const std::string& prefix, const AdamT<float>& opt,
                  ParamRefs<float> params) {
    for (std::size_t i = 0; i < params.size(); ++i) {
        out.push_back({prefix + ".m." + params[i]->name, &opt.m[i]});
        out.push_back({prefix + ".v." + params[i]->name, &opt.v[i]});
    }
}

void fill_adam(const Archive& ar, const std::string& prefix, AdamT<float>& opt,
               ParamRefs<float> params) {
    opt.init(params);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto mit = ar.arrays.find(prefix + ".m." + params[i]->name);
        const auto vit = ar.arrays.find(prefix + ".v." + params[i]->name);
        if (mit == ar.arrays.end() || vit == ar.arrays.end())
            throw std::runtime_error("checkpoint: missing optimizer state for " + params[i]->name);
        opt.m[i] = mit->second;
        opt.v[i] = vit->second;
    }
}

} // namespace

nlohmann::json schedule_to_json(const NoiseSchedule& sched) {
    return {{"T", sched.T}, {"beta_start", sched.beta_start}, {"beta_end", sched.beta_end}};
}

NoiseSchedule schedule_from_json(const nlohmann::json& j) {
    return build_schedule(j.at("T"), j.at("beta_start"), j.at("beta_end"));
}

nlohmann::json weighting_to_json(const WeightingParams& wp) {
    return {{"form", to_string(wp.form)}, {"mu", wp.mu},       {"nu", wp.nu},
            {"gamma", wp.gamma},          {"kappa", wp.kappa}, {"lambda", wp.lambda}};
}

WeightingParams weighting_from_json(const nlohmann::json& j) {
    WeightingParams wp;
    wp.form = weighting_form_from_string(j.at("form"));
    wp.mu = j.at("mu");
    wp.nu = j.at("nu");
    wp.gamma = j.at("gamma");
    wp.kappa = j.at("kappa");
    wp.lambda = j.at("lambda");
    return wp;
}

nlohmann::json denoiser_arch_to_json(const DenoiserArch& a) {
    return {{"width1", a.width1},     {"width2", a.width2},
            {"width3", a.width3},     {"temb_dim", a.temb_dim},
            {"num_classes", a.num_classes}, {"max_timestep", a.max_timestep}};
}

DenoiserArch denoiser_arch_from_json(const nlohmann::json& j) {
    DenoiserArch a;
    a.width1 = j.at("width1");
    a.width2 = j.at("width2");
    a.width3 = j.at("width3");
    a.temb_dim = j.at("temb_dim");
    a.num_classes = j.at("num_classes");
    a.max_timestep = j.at("max_timestep");
    return a;
}

void save_denoiser(const std::string& path, Denoiser& net, const NoiseSchedule& sched,
                   const StudentTimestepSet& sts) {
    nlohmann::json meta;
    meta["kind"] = "denoiser";
    meta["schedule"] = schedule_to_json(sched);
    meta["anchors"] = sts.anchors;
    meta["arch"] = denoiser_arch_to_json(net.arch);
    std::vector<NamedArray> arrays;
    collect_net(arrays, "net.", net.params());
    write_archive(path, meta, arrays);
}

TeacherCheckpoint load_denoiser(const std::string& path) {
    const Archive ar = read_archive(path);
    if (ar.meta.at("kind") != "denoiser")
        throw std::runtime_error("checkpoint: expected a denoiser checkpoint: " + path);
    TeacherCheckpoint out;
    out.sched = schedule_from_json(ar.meta.at("schedule"));
    out.sts = make_student_timesteps(ar.meta.at("anchors").get<std::vector<int>>(), out.sched.T);
    Rng dummy(0);
    out.net = Denoiser(denoiser_arch_from_json(ar.meta.at("arch")), dummy);
    fill_net(ar, "net.", out.net.params());
    return out;
}

void save_train_state(const std::string& path, TrainState& state, const WeightingParams& wp) {
    nlohmann::json meta;
    meta["kind"] = "train_state";
    meta["schedule"] = schedule_to_json(state.sched);
    meta["anchors"] = state.sts.anchors;
    meta["arch"] = denoiser_arch_to_json(state.student.arch);
    meta["disc_arch"] = {{"width", state.disc.arch.width},
                         {"cond_width", state.disc.arch.cond_width},
                         {"scale", state.disc.arch.scale}};
    meta["weighting"] = weighting_to_json(wp);
    meta["step"] = state.step;
    meta["seed"] = state.seed;
    meta["opt_g"] = {{"lr", state.opt_g.lr}, {"beta1", state.opt_g.beta1},
                     {"beta2", state.opt_g.beta2}, {"eps", state.opt_g.eps}, {"t", state.opt_g.t}};
    meta["opt_d"] = {{"lr", state.opt_d.lr}, {"beta1", state.opt_d.beta1},
                     {"beta2", state.opt_d.beta2}, {"eps", state.opt_d.eps}, {"t", state.opt_d.t}};

    std::vector<NamedArray> arrays;
    collect_net(arrays, "student.", state.student.params());
    collect_net(arrays, "teacher.", state.teacher.params());
    collect_net(arrays, "disc.", state.disc.params());
    collect_adam(arrays, "opt_g", state.opt_g, state.student.params());
    collect_adam(arrays, "opt_d", state.opt_d, state.disc.params());
    write_archive(path, meta, arrays);
}

TrainCheckpoint load_train_state(const std::string& path) {
    const Archive ar = read_archive(path);
    if (ar.meta.at("kind") != "train_state")
        throw std::runtime_error("checkpoint: expected a train-state checkpoint: " + path);

    TrainCheckpoint out;
    out.wp = weighting_from_json(ar.meta.at("weighting"));
    TrainState& st = out.state;
    st.sched = schedule_from_json(ar.meta.at("schedule"));
    st.sts = make_student_timesteps(ar.meta.at("anchors").get<std::vector<int>>(), st.sched.T);
    st.step = ar.meta.at("step");
    st.seed = ar.meta.at("seed");

    Rng dummy(0);
    const DenoiserArch arch = denoiser_arch_from_json(ar.meta.at("arch"));
    st.student = Denoiser(arch, dummy);
    st.teacher = Denoiser(arch, dummy);
    DiscriminatorArch da;
    da.width = ar.meta.at("disc_arch").at("width");
    da.cond_width = ar.meta.at("disc_arch").at("cond_width");
    da.scale = ar.meta.at("disc_arch").at("scale");
    st.disc = Discriminator(da, dummy);

    fill_net(ar, "student.", st.student.params());
    fill_net(ar, "teacher.", st.teacher.params());
    fill_net(ar, "disc.", st.disc.params());

    const auto load_opt = [&](AdamT<float>& opt, const nlohmann::json& j) {
        opt.lr = j.at("lr");
        opt.beta1 = j.at("beta1");
        opt.beta2 = j.at("beta2");
        opt.eps = j.at("eps");
        opt.t = j.at("t");
    };
    load_opt(st.opt_g, ar.meta.at("opt_g"));
    load_opt(st.opt_d, ar.meta.at("opt_d"));
    fill_adam(ar, "opt_g", st.opt_g, st.student.params());
    fill_adam(ar, "opt_d", st.opt_d, st.disc.params());
    // fill_adam's init reset t; restore it.
    st.opt_g.t = ar.meta.at("opt_g").at("t");
    st.opt_d.t = ar.meta.at("opt_d").at("t");
    return out;
}

nlohmann::json read_checkpoint_meta(const std::string& path) {
    return read_archive(path).meta;
}

void verify_checkpoint_schedule(const nlohmann::json& meta, const NoiseSchedule& expected) {
    const nlohmann::json s = meta.at("schedule");
    if (s.at("T").get<int>() != expected.T ||
        s.at("beta_start").get<double>() != expected.beta_start ||
        s.at("beta_end").get<double>() != expected.beta_end)
        throw ConfigError("checkpoint schedule mismatch: checkpoint has T=" +
                          s.at("T").dump() + ", beta=[" + s.at("beta_start").dump() + "," +
                          s.at("beta_end").dump() + "], run expects T=" + std::to_string(expected.T));
}

} // namespace addsr
