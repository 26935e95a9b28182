#include "cpalab/error.h"
#include "cpalab/json_io.h"
#include "cpalab/tracegen.h"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace cpalab {

namespace {

using nlohmann::json;

constexpr std::array<char, 4> kMagic = {'C', 'P', 'A', 'T'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint16_t kFlagWeightsUnknown = 0x1;
constexpr std::uint16_t kFlagWindowMap = 0x2;
constexpr std::uint8_t kDtypeF32 = 0;
constexpr std::size_t kHeaderSize = 28;

struct Header {
    std::uint16_t version = kVersion;
    std::uint16_t flags = 0;
    std::uint32_t n_runs = 0;
    std::uint32_t n_traces = 0;
    std::uint32_t n_samples = 0;
    std::uint8_t dtype = kDtypeF32;
};

class Writer {
  public:
    explicit Writer(const std::filesystem::path &path) : out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_)
            throw Error("cannot open " + path.string() + " for writing");
    }
    void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
    void u16(std::uint16_t v) {
        for (int i = 0; i < 2; ++i)
            u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i)
            u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void bytes(const char *p, std::size_t n) { out_.write(p, static_cast<std::streamsize>(n)); }
    void finish(const std::filesystem::path &path) {
        out_.flush();
        if (!out_)
            throw Error("write to " + path.string() + " failed");
    }

  private:
    std::ofstream out_;
};

class Reader {
  public:
    Reader(std::vector<unsigned char> data, std::string name) : data_(std::move(data)), name_(std::move(name)) {}

    std::size_t size() const { return data_.size(); }
    std::size_t remaining() const { return data_.size() - pos_; }

    void need(std::size_t n) const {
        if (remaining() < n)
            throw TruncationError(name_ + ": truncated at byte " + std::to_string(pos_) + " (need " +
                                  std::to_string(n) + " more, have " + std::to_string(remaining()) + ")");
    }
    std::uint8_t u8() {
        need(1);
        return data_[pos_++];
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint16_t>(data_[pos_] | (data_[pos_ + 1] << 8));
        pos_ += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    void skip(std::size_t n) {
        need(n);
        pos_ += n;
    }

  private:
    std::vector<unsigned char> data_;
    std::size_t pos_ = 0;
    std::string name_;
};

std::vector<unsigned char> read_all(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json read_json(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        throw FormatError("cannot open metadata " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception &e) {
        throw FormatError("metadata " + path.string() + " is not valid JSON: " + e.what());
    }
}

void write_i32_block(Writer &w, const std::vector<std::int32_t> &values) {
    for (auto v : values)
        w.u32(static_cast<std::uint32_t>(v));
}

void write_f32_block(Writer &w, const std::vector<float> &values) {
    for (auto v : values)
        w.u32(std::bit_cast<std::uint32_t>(v));
}

void read_i32_block(Reader &r, std::vector<std::int32_t> &out) {
    r.need(out.size() * 4);
    for (auto &v : out)
        v = static_cast<std::int32_t>(r.u32());
}

void read_f32_block(Reader &r, std::vector<float> &out) {
    r.need(out.size() * 4);
    for (auto &v : out)
        v = std::bit_cast<float>(r.u32());
}

Header read_header(Reader &r, const std::string &name) {
    if (r.size() < kHeaderSize)
        throw TruncationError(name + ": file shorter than the " + std::to_string(kHeaderSize) + "-byte header");
    std::array<char, 4> magic{};
    for (auto &c : magic)
        c = static_cast<char>(r.u8());
    if (magic != kMagic)
        throw FormatError(name + ": bad magic, not a CPAT trace file");
    Header h;
    h.version = r.u16();
    if (h.version != kVersion)
        throw FormatError(name + ": unsupported version " + std::to_string(h.version));
    h.flags = r.u16();
    h.n_runs = r.u32();
    h.n_traces = r.u32();
    h.n_samples = r.u32();
    h.dtype = r.u8();
    if (h.dtype != kDtypeF32)
        throw FormatError(name + ": unsupported sample dtype code " + std::to_string(h.dtype));
    r.skip(7);
    return h;
}

json window_to_json(const std::vector<std::size_t> &window) {
    json j = json::object();
    for (std::size_t tau = 0; tau < window.size(); ++tau)
        if (window[tau] != static_cast<std::size_t>(-1))
            j[std::to_string(tau)] = window[tau];
    return j;
}

std::vector<std::size_t> window_from_json(const json &j, std::size_t n_samples, const std::string &name) {
    if (!j.is_object())
        throw FormatError(name + ": 'window' must map step -> sample index");
    std::vector<std::size_t> window;
    for (const auto &[key, value] : j.items()) {
        std::size_t tau = 0;
        try {
            tau = std::stoul(key);
        } catch (const std::exception &) {
            throw FormatError(name + ": window key '" + key + "' is not a step index");
        }
        const auto col = value.get<std::size_t>();
        if (col >= n_samples)
            throw DimensionError(name + ": window maps step " + key + " to sample " + std::to_string(col) +
                                 " but traces have " + std::to_string(n_samples) + " samples");
        if (window.size() <= tau)
            window.resize(tau + 1, static_cast<std::size_t>(-1));
        window[tau] = col;
    }
    return window;
}

std::uint32_t checked_u32(std::size_t v, const char *what) {
    if (v > 0xFFFFFFFFu)
        throw DimensionError(std::string(what) + " does not fit the trace file header");
    return static_cast<std::uint32_t>(v);
}

} // namespace

std::filesystem::path sidecar_path(const std::filesystem::path &trace_path) {
    auto p = trace_path;
    p += ".json";
    return p;
}

void save_campaign(const TraceCampaign &campaign, const std::filesystem::path &path) {
    if (campaign.runs.empty())
        throw DimensionError("cannot save an empty campaign");
    const auto &first = campaign.runs.front();
    const std::size_t n_pe = campaign.config.n_pe;
    const std::size_t n_samples = first.samples.cols();
    for (const auto &run : campaign.runs) {
        if (run.inputs.rows() != campaign.n_traces || run.inputs.cols() != campaign.n_tau ||
            run.samples.rows() != campaign.n_traces || run.samples.cols() != n_samples ||
            run.weights.rows() != n_pe || run.weights.cols() != campaign.n_tau ||
            run.weights_known != first.weights_known)
            throw DimensionError("campaign runs have inconsistent dimensions");
    }

    Header h;
    h.flags = static_cast<std::uint16_t>((first.weights_known ? 0 : kFlagWeightsUnknown) |
                                         (first.window.empty() ? 0 : kFlagWindowMap));
    h.n_runs = checked_u32(campaign.runs.size(), "run count");
    h.n_traces = checked_u32(campaign.n_traces, "trace count");
    h.n_samples = checked_u32(n_samples, "sample count");

    Writer w(path);
    w.bytes(kMagic.data(), kMagic.size());
    w.u16(h.version);
    w.u16(h.flags);
    w.u32(h.n_runs);
    w.u32(h.n_traces);
    w.u32(h.n_samples);
    w.u8(h.dtype);
    for (int i = 0; i < 7; ++i)
        w.u8(0);
    for (const auto &run : campaign.runs) {
        if (run.weights_known)
            write_i32_block(w, run.weights.data());
        else
            write_i32_block(w, std::vector<std::int32_t>(run.weights.size(), 0));
        write_i32_block(w, run.inputs.data());
        write_f32_block(w, run.samples.data());
    }
    w.finish(path);

    json meta;
    meta["format"] = "CPAT";
    meta["version"] = kVersion;
    meta["config"] = to_json(campaign.config);
    meta["distribution"] = to_json(campaign.distribution);
    meta["n_tau"] = campaign.n_tau;
    meta["n_traces"] = campaign.n_traces;
    meta["n_runs"] = campaign.runs.size();
    meta["n_samples"] = n_samples;
    meta["master_seed"] = campaign.master_seed;
    json seeds = json::array();
    for (const auto &run : campaign.runs)
        seeds.push_back(run.seed);
    meta["run_seeds"] = seeds;
    if (!first.window.empty())
        meta["window"] = window_to_json(first.window);
    std::ofstream out(sidecar_path(path));
    if (!out)
        throw Error("cannot write " + sidecar_path(path).string());
    out << meta.dump(2) << '\n';
}

TraceCampaign load_campaign(const std::filesystem::path &path) {
    const std::string name = path.string();
    Reader r(read_all(path), name);
    const Header h = read_header(r, name);

    const auto meta_path = sidecar_path(path);
    if (!std::filesystem::exists(meta_path))
        throw FormatError(name + ": missing metadata sidecar " + meta_path.string());
    const json meta = read_json(meta_path);

    TraceCampaign c;
    try {
        c.config = array_config_from_json(meta.at("config"));
        c.distribution = distribution_from_json(meta.at("distribution"));
        c.n_tau = meta.at("n_tau").get<std::size_t>();
        c.n_traces = meta.at("n_traces").get<std::size_t>();
        c.master_seed = meta.at("master_seed").get<std::uint64_t>();
        if (meta.at("n_runs").get<std::size_t>() != h.n_runs)
            throw DimensionError(name + ": sidecar n_runs disagrees with the header");
        if (meta.value("n_samples", static_cast<std::size_t>(h.n_samples)) != h.n_samples)
            throw DimensionError(name + ": sidecar n_samples disagrees with the header");
    } catch (const nlohmann::json::exception &e) {
        throw FormatError(name + ": incomplete sidecar: " + e.what());
    }
    if (c.n_traces != h.n_traces)
        throw DimensionError(name + ": header holds " + std::to_string(h.n_traces) +
                             " traces per run, sidecar says " + std::to_string(c.n_traces));

    const std::size_t n_pe = c.config.n_pe;
    const std::size_t per_run = 4 * (n_pe * c.n_tau + c.n_traces * c.n_tau + c.n_traces * h.n_samples);
    const std::size_t expected = kHeaderSize + per_run * h.n_runs;
    if (r.size() < expected)
        throw TruncationError(name + ": header announces " + std::to_string(expected) + " bytes, file has " +
                              std::to_string(r.size()));
    if (r.size() > expected)
        throw DimensionError(name + ": " + std::to_string(r.size() - expected) +
                             " bytes beyond the announced dimensions");

    std::vector<std::size_t> window;
    if (meta.contains("window"))
        window = window_from_json(meta.at("window"), h.n_samples, name);
    std::vector<std::uint64_t> seeds;
    if (meta.contains("run_seeds"))
        seeds = meta.at("run_seeds").get<std::vector<std::uint64_t>>();

    c.runs.resize(h.n_runs);
    for (std::size_t i = 0; i < h.n_runs; ++i) {
        auto &run = c.runs[i];
        run.weights = Matrix<std::int32_t>(n_pe, c.n_tau);
        run.inputs = Matrix<std::int32_t>(c.n_traces, c.n_tau);
        run.samples = Matrix<float>(c.n_traces, h.n_samples);
        read_i32_block(r, run.weights.data());
        read_i32_block(r, run.inputs.data());
        read_f32_block(r, run.samples.data());
        run.weights_known = (h.flags & kFlagWeightsUnknown) == 0;
        run.seed = i < seeds.size() ? seeds[i] : run_seed(c.master_seed, i);
        run.window = window;
    }
    return c;
}

void write_import_metadata(const SimulationRun &run, const std::filesystem::path &meta_path) {
    json meta;
    meta["n_traces"] = run.n_traces();
    meta["n_pe"] = run.n_pe();
    json inputs = json::array();
    for (std::size_t t = 0; t < run.inputs.rows(); ++t) {
        const auto row = run.inputs.row(t);
        inputs.push_back(std::vector<std::int32_t>(row.begin(), row.end()));
    }
    meta["inputs"] = std::move(inputs);
    if (!run.window.empty())
        meta["window"] = window_to_json(run.window);
    std::ofstream out(meta_path);
    if (!out)
        throw Error("cannot write " + meta_path.string());
    out << meta.dump() << '\n';
}

SimulationRun import_external_traces(const std::filesystem::path &trace_path,
                                     const std::filesystem::path &meta_path, std::size_t run_index) {
    const std::string name = trace_path.string();
    Reader r(read_all(trace_path), name);
    const Header h = read_header(r, name);
    const json meta = read_json(meta_path);

    if (!meta.contains("inputs") || !meta.at("inputs").is_array() || meta.at("inputs").empty())
        throw UnusableForCpaError(meta_path.string() +
                                  ": no per-trace inputs; correlation attacks need the known inputs");
    const auto &rows = meta.at("inputs");
    if (rows.size() != h.n_traces)
        throw DimensionError(meta_path.string() + ": " + std::to_string(rows.size()) + " input rows for " +
                             std::to_string(h.n_traces) + " traces");
    if (meta.contains("n_traces") && meta.at("n_traces").get<std::size_t>() != h.n_traces)
        throw DimensionError(meta_path.string() + ": n_traces " + meta.at("n_traces").dump() +
                             " disagrees with the trace file (" + std::to_string(h.n_traces) + ")");
    if (run_index >= h.n_runs)
        throw RangeError(name + ": run " + std::to_string(run_index) + " requested, file holds " +
                         std::to_string(h.n_runs));

    const std::size_t n_tau = rows.at(0).size();
    if (n_tau == 0)
        throw UnusableForCpaError(meta_path.string() + ": input rows are empty");
    SimulationRun run;
    run.weights_known = false;
    run.inputs = Matrix<std::int32_t>(h.n_traces, n_tau);
    for (std::size_t t = 0; t < rows.size(); ++t) {
        if (!rows[t].is_array() || rows[t].size() != n_tau)
            throw DimensionError(meta_path.string() + ": input row " + std::to_string(t) + " does not have " +
                                 std::to_string(n_tau) + " entries");
        for (std::size_t k = 0; k < n_tau; ++k)
            run.inputs(t, k) = rows[t][k].get<std::int32_t>();
    }

    // The weight block is n_pe * n_tau words; n_pe is taken from the metadata
    // or inferred from the file length.
    const std::size_t fixed = 4 * (static_cast<std::size_t>(h.n_traces) * n_tau +
                                   static_cast<std::size_t>(h.n_traces) * h.n_samples);
    const std::size_t body = r.size() - kHeaderSize;
    std::size_t n_pe = 0;
    if (meta.contains("n_pe")) {
        n_pe = meta.at("n_pe").get<std::size_t>();
    } else {
        if (h.n_runs == 0 || body % h.n_runs != 0 || body / h.n_runs < fixed ||
            (body / h.n_runs - fixed) % (4 * n_tau) != 0)
            throw DimensionError(name + ": cannot infer the weight block size; add n_pe to the metadata");
        n_pe = (body / h.n_runs - fixed) / (4 * n_tau);
    }
    const std::size_t per_run = 4 * n_pe * n_tau + fixed;
    if (body < per_run * h.n_runs)
        throw TruncationError(name + ": file too short for " + std::to_string(h.n_runs) + " runs");

    r.skip(per_run * run_index);
    run.weights = Matrix<std::int32_t>(n_pe, n_tau);
    read_i32_block(r, run.weights.data());
    std::fill(run.weights.data().begin(), run.weights.data().end(), 0);
    std::vector<std::int32_t> file_inputs(static_cast<std::size_t>(h.n_traces) * n_tau);
    read_i32_block(r, file_inputs);
    run.samples = Matrix<float>(h.n_traces, h.n_samples);
    read_f32_block(r, run.samples.data());
    if (meta.contains("window"))
        run.window = window_from_json(meta.at("window"), h.n_samples, meta_path.string());
    if (meta.contains("seed"))
        run.seed = meta.at("seed").get<std::uint64_t>();
    return run;
}

} // namespace cpalab
