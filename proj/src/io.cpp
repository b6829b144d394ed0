#include "convspect/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "convspect/version.hpp"

namespace convspect {

using nlohmann::json;

namespace {

void append_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t parse_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void append_f64(std::string& buf, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double parse_f64(const unsigned char* p) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(ParseError::Kind::IoFailure, "cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string provenance(const std::string& kind, const std::string& fields) {
    std::string out = "# convspect " CONVSPECT_VERSION " ";
    out += kind;
    out += "\n# ";
    out += fields;
    out += "\n";
    return out;
}

} // namespace

void atomic_write_file(const std::string& path, const std::string& contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ParseError(ParseError::Kind::IoFailure, "cannot write " + tmp);
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw ParseError(ParseError::Kind::IoFailure, "write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw ParseError(ParseError::Kind::IoFailure, "cannot rename " + tmp + " to " + path);
    }
}

void write_tensor(const std::string& path, const RealTensor& x) {
    std::string buf;
    buf.reserve(16 + x.v.size() * 8);
    buf += "CSPT";
    append_u32(buf, 1);
    append_u32(buf, static_cast<std::uint32_t>(x.channels));
    append_u32(buf, static_cast<std::uint32_t>(x.n));
    for (double v : x.v) append_f64(buf, v);
    atomic_write_file(path, buf);
}

RealTensor read_tensor(const std::string& path) {
    const std::string raw = slurp(path);
    const auto* p = reinterpret_cast<const unsigned char*>(raw.data());
    if (raw.size() < 16) throw ParseError(ParseError::Kind::TruncatedPayload, path + ": file shorter than header");
    if (std::memcmp(p, "CSPT", 4) != 0) throw ParseError(ParseError::Kind::BadMagic, path + ": bad magic");
    const std::uint32_t version = parse_u32(p + 4);
    if (version != 1)
        throw ParseError(ParseError::Kind::VersionMismatch,
                         path + ": unsupported version " + std::to_string(version));
    const std::uint32_t channels = parse_u32(p + 8);
    const std::uint32_t n = parse_u32(p + 12);
    if (channels == 0 || n == 0)
        throw ParseError(ParseError::Kind::InvalidHeader, path + ": zero channels or size");
    const size_t expected = 16 + static_cast<size_t>(channels) * n * n * 8;
    if (raw.size() < expected)
        throw ParseError(ParseError::Kind::TruncatedPayload, path + ": truncated payload");
    if (raw.size() > expected)
        throw ParseError(ParseError::Kind::TrailingData, path + ": trailing bytes after payload");
    RealTensor x(static_cast<int>(channels), static_cast<int>(n));
    for (size_t i = 0; i < x.v.size(); ++i) x.v[i] = parse_f64(p + 16 + i * 8);
    return x;
}

void write_image(const std::string& path, const RealTensor& x, ImageFormat format) {
    if (!x.in_unit_range()) throw ContractError("write_image: values must lie in [0, 1]");

    std::string buf;
    if (format == ImageFormat::Raw8) {
        // headerless channel-major dump
        for (double v : x.v) buf.push_back(static_cast<char>(std::lround(255.0 * v)));
        atomic_write_file(path, buf);
        return;
    }

    const int want_channels = format == ImageFormat::PgmP5 ? 1 : 3;
    if (x.channels != want_channels)
        throw ContractError("write_image: format needs " + std::to_string(want_channels) +
                            " channels, tensor has " + std::to_string(x.channels));
    buf += format == ImageFormat::PgmP5 ? "P5" : "P6";
    buf += "\n" + std::to_string(x.n) + " " + std::to_string(x.n) + "\n255\n";
    for (int y = 0; y < x.n; ++y)
        for (int xx = 0; xx < x.n; ++xx)
            for (int c = 0; c < x.channels; ++c)
                buf.push_back(static_cast<char>(std::lround(255.0 * x.at(c, y, xx))));
    atomic_write_file(path, buf);
}

RealTensor read_raw8(const std::string& path, int channels, int n) {
    if (channels < 1 || n < 1) throw ContractError("read_raw8: channels and n must be >= 1");
    const std::string raw = slurp(path);
    const size_t expected = static_cast<size_t>(channels) * n * n;
    if (raw.size() < expected)
        throw ParseError(ParseError::Kind::TruncatedPayload, path + ": truncated raw payload");
    if (raw.size() > expected)
        throw ParseError(ParseError::Kind::TrailingData, path + ": trailing bytes");
    RealTensor x(channels, n);
    for (size_t i = 0; i < expected; ++i)
        x.v[i] = static_cast<double>(static_cast<unsigned char>(raw[i])) / 255.0;
    return x;
}

namespace {

// PNM token reader: skips whitespace and # comments.
std::string next_pnm_token(const std::string& raw, size_t& pos) {
    while (pos < raw.size()) {
        if (std::isspace(static_cast<unsigned char>(raw[pos]))) {
            ++pos;
        } else if (raw[pos] == '#') {
            while (pos < raw.size() && raw[pos] != '\n') ++pos;
        } else {
            break;
        }
    }
    const size_t start = pos;
    while (pos < raw.size() && !std::isspace(static_cast<unsigned char>(raw[pos]))) ++pos;
    return raw.substr(start, pos - start);
}

} // namespace

RealTensor read_image(const std::string& path) {
    const std::string raw = slurp(path);
    size_t pos = 0;
    const std::string magic = next_pnm_token(raw, pos);
    int channels = 0;
    if (magic == "P5")
        channels = 1;
    else if (magic == "P6")
        channels = 3;
    else
        throw ParseError(ParseError::Kind::BadMagic, path + ": not a P5/P6 image");

    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(next_pnm_token(raw, pos));
        h = std::stoi(next_pnm_token(raw, pos));
        maxval = std::stoi(next_pnm_token(raw, pos));
    } catch (const std::exception&) {
        throw ParseError(ParseError::Kind::InvalidHeader, path + ": malformed image header");
    }
    if (w < 1 || h < 1) throw ParseError(ParseError::Kind::InvalidHeader, path + ": bad dimensions");
    if (w != h) throw ParseError(ParseError::Kind::InvalidHeader, path + ": image must be square");
    if (maxval != 255)
        throw ParseError(ParseError::Kind::InvalidHeader,
                         path + ": maxval must be 255, got " + std::to_string(maxval));
    ++pos; // single whitespace after maxval
    const size_t expected = static_cast<size_t>(w) * h * channels;
    if (raw.size() < pos + expected)
        throw ParseError(ParseError::Kind::TruncatedPayload, path + ": truncated pixel data");

    RealTensor x(channels, w);
    const auto* p = reinterpret_cast<const unsigned char*>(raw.data()) + pos;
    for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx)
            for (int c = 0; c < channels; ++c)
                x.at(c, y, xx) = static_cast<double>(*p++) / 255.0;
    return x;
}

RealTensor read_tensor_or_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(ParseError::Kind::IoFailure, "cannot open " + path);
    char magic[4] = {0, 0, 0, 0};
    in.read(magic, 4);
    in.close();
    if (std::memcmp(magic, "CSPT", 4) == 0) return read_tensor(path);
    return read_image(path);
}

void write_rendered_pgm(const std::string& path, const Eigen::MatrixXd& grid, bool centered) {
    const int n = static_cast<int>(grid.rows());
    if (n < 1 || grid.cols() != n) throw ContractError("write_rendered_pgm: square grid required");
    const double lo = grid.minCoeff();
    const double hi = grid.maxCoeff();
    const double span = hi - lo;

    std::string buf = "P5\n" + std::to_string(n) + " " + std::to_string(n) + "\n255\n";
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            const int sy = centered ? (y + n / 2) % n : y;
            const int sx = centered ? (x + n / 2) % n : x;
            const double v = span > 0.0 ? (grid(sy, sx) - lo) / span : 0.0;
            buf.push_back(static_cast<char>(std::lround(255.0 * v)));
        }
    }
    atomic_write_file(path, buf);
}

std::string network_to_json(const NetworkSpec& net, std::uint64_t seed) {
    json doc;
    doc["skip"] = net.skip;
    if (seed != 0) doc["seed"] = seed;
    doc["layers"] = json::array();
    for (const auto& layer : net.layers) {
        const ConvKernel& k = layer.kernel;
        if (k.k_h != k.k_w) throw ContractError("network_to_json: only square kernels serialize");
        json jl;
        jl["out"] = k.out_channels;
        jl["in"] = k.in_channels;
        jl["k"] = k.k_h;
        jl["stride"] = layer.stride;
        jl["weights"] = k.w;
        if (layer.norm_scale) jl["norm"] = *layer.norm_scale;
        doc["layers"].push_back(std::move(jl));
    }
    return doc.dump(2) + "\n";
}

NetworkSpec network_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(ParseError::Kind::MalformedField, std::string("network: ") + e.what());
    }
    NetworkSpec net;
    try {
        net.skip = doc.value("skip", false);
        if (!doc.contains("layers") || !doc["layers"].is_array() || doc["layers"].empty())
            throw ParseError(ParseError::Kind::MalformedField, "network: 'layers' must be a nonempty array");
        int idx = 0;
        for (const auto& jl : doc["layers"]) {
            const std::string where = "network layer " + std::to_string(idx);
            const int out = jl.at("out").get<int>();
            const int in = jl.at("in").get<int>();
            const int k = jl.at("k").get<int>();
            const int stride = jl.value("stride", 1);
            if (out < 1 || in < 1 || k < 1)
                throw ParseError(ParseError::Kind::MalformedField, where + ": out/in/k must be >= 1");
            ConvLayer layer;
            layer.kernel = ConvKernel(out, in, k, k);
            layer.stride = stride;
            const auto& wj = jl.at("weights");
            if (!wj.is_array() || wj.size() != layer.kernel.w.size())
                throw ParseError(ParseError::Kind::MalformedField,
                                 where + ": 'weights' must hold " + std::to_string(layer.kernel.w.size()) +
                                     " values, got " + std::to_string(wj.size()));
            for (size_t i = 0; i < layer.kernel.w.size(); ++i) layer.kernel.w[i] = wj[i].get<double>();
            if (jl.contains("norm")) {
                const auto& nj = jl["norm"];
                if (!nj.is_array() || static_cast<int>(nj.size()) != out)
                    throw ParseError(ParseError::Kind::MalformedField,
                                     where + ": 'norm' must hold one scale per output channel");
                std::vector<double> scales(nj.size());
                for (size_t i = 0; i < nj.size(); ++i) scales[i] = nj[i].get<double>();
                layer.norm_scale = std::move(scales);
            }
            net.layers.push_back(std::move(layer));
            ++idx;
        }
    } catch (const json::exception& e) {
        throw ParseError(ParseError::Kind::MalformedField, std::string("network: ") + e.what());
    }
    validate_network(net);
    return net;
}

void write_network(const std::string& path, const NetworkSpec& net, std::uint64_t seed) {
    atomic_write_file(path, network_to_json(net, seed));
}

NetworkSpec read_network(const std::string& path) { return network_from_json(slurp(path)); }

std::string toy_cnn_to_json(const ToyCnnSpec& spec) {
    json doc;
    doc["kind"] = "toy-cnn";
    doc["seed"] = spec.seed;
    doc["in_channels"] = spec.in_channels;
    doc["num_classes"] = spec.num_classes;
    doc["stages"] = json::array();
    for (const auto& st : spec.stages) {
        json js;
        js["out"] = st.out_channels;
        js["k"] = st.k;
        js["stride"] = st.stride;
        js["activation"] = st.activation == Activation::Relu ? "relu" : "linear";
        js["pool"] = st.pool == Pool::Max2 ? "max2" : "none";
        doc["stages"].push_back(std::move(js));
    }
    return doc.dump(2) + "\n";
}

std::string toy_mlp_to_json(const ToyMlpSpec& spec) {
    json doc;
    doc["kind"] = "toy-mlp";
    doc["seed"] = spec.seed;
    doc["n"] = spec.n;
    doc["in_channels"] = spec.in_channels;
    doc["hidden"] = spec.hidden;
    doc["num_classes"] = spec.num_classes;
    return doc.dump(2) + "\n";
}

std::unique_ptr<Oracle> oracle_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(ParseError::Kind::MalformedField, std::string("oracle spec: ") + e.what());
    }
    try {
        const std::string kind = doc.at("kind").get<std::string>();
        if (kind == "toy-cnn") {
            ToyCnnSpec spec;
            spec.seed = doc.at("seed").get<std::uint64_t>();
            spec.in_channels = doc.at("in_channels").get<int>();
            spec.num_classes = doc.at("num_classes").get<int>();
            for (const auto& js : doc.at("stages")) {
                ConvStageSpec st;
                st.out_channels = js.at("out").get<int>();
                st.k = js.at("k").get<int>();
                st.stride = js.value("stride", 1);
                const std::string act = js.value("activation", "relu");
                if (act == "relu")
                    st.activation = Activation::Relu;
                else if (act == "linear")
                    st.activation = Activation::Linear;
                else
                    throw ParseError(ParseError::Kind::MalformedField,
                                     "oracle spec: unknown activation '" + act + "'");
                const std::string pool = js.value("pool", "none");
                if (pool == "max2")
                    st.pool = Pool::Max2;
                else if (pool == "none")
                    st.pool = Pool::None;
                else
                    throw ParseError(ParseError::Kind::MalformedField,
                                     "oracle spec: unknown pool '" + pool + "'");
                spec.stages.push_back(st);
            }
            return make_toy_cnn(spec);
        }
        if (kind == "toy-mlp") {
            ToyMlpSpec spec;
            spec.seed = doc.at("seed").get<std::uint64_t>();
            spec.n = doc.at("n").get<int>();
            spec.in_channels = doc.at("in_channels").get<int>();
            spec.hidden = doc.at("hidden").get<std::vector<int>>();
            spec.num_classes = doc.at("num_classes").get<int>();
            return std::make_unique<ToyMlpOracle>(spec);
        }
        throw ParseError(ParseError::Kind::MalformedField, "oracle spec: unknown kind '" + kind + "'");
    } catch (const json::exception& e) {
        throw ParseError(ParseError::Kind::MalformedField, std::string("oracle spec: ") + e.what());
    }
}

std::unique_ptr<Oracle> read_oracle_spec(const std::string& path) {
    return oracle_from_json(slurp(path));
}

void write_heatmap_csv(const std::string& path, const FoolHeatmap& hm) {
    std::string out = provenance(
        "heatmap", "n=" + std::to_string(hm.n) + " eps=" + format_double(hm.epsilon) +
                       " seed=" + std::to_string(hm.seed) + " batch=" + std::to_string(hm.batch_size) +
                       " signed=" + (hm.is_signed ? std::string("1") : std::string("0")) +
                       " oracle=" + hm.oracle_desc);
    out += "i,j,value\n";
    for (int i = 0; i < hm.n; ++i)
        for (int j = 0; j < hm.n; ++j)
            out += std::to_string(i) + "," + std::to_string(j) + "," + format_double(hm.values(i, j)) + "\n";
    atomic_write_file(path, out);
}

void write_response_csv(const std::string& path, const ResponseMap& map) {
    std::string out = provenance("response", "n=" + std::to_string(map.n) + " seed=- eps=- kernel=" +
                                                 map.kernel_desc);
    out += "i,j,value\n";
    for (int i = 0; i < map.n; ++i)
        for (int j = 0; j < map.n; ++j)
            out += std::to_string(i) + "," + std::to_string(j) + "," + format_double(map.values(i, j)) + "\n";
    atomic_write_file(path, out);
}

void write_spectrum_csv(const std::string& path,
                        const std::vector<std::pair<double, Frequency>>& spectrum, int n,
                        const std::string& source_desc, size_t top_k) {
    std::string out =
        provenance("spectrum", "n=" + std::to_string(n) + " seed=- eps=- source=" + source_desc);
    out += "sigma,i,j\n";
    const size_t limit = top_k == 0 ? spectrum.size() : std::min(top_k, spectrum.size());
    for (size_t t = 0; t < limit; ++t)
        out += format_double(spectrum[t].first) + "," + std::to_string(spectrum[t].second.i) + "," +
               std::to_string(spectrum[t].second.j) + "\n";
    atomic_write_file(path, out);
}

void write_analysis_csv(const std::string& path, const std::vector<Eigen::MatrixXd>& spectra,
                        const std::string& source_desc) {
    if (spectra.empty()) throw ContractError("write_analysis_csv: no channels");
    const int n = static_cast<int>(spectra.front().rows());
    std::string out =
        provenance("analysis", "n=" + std::to_string(n) + " seed=- eps=- source=" + source_desc);
    out += "channel,i,j,logmag\n";
    for (size_t c = 0; c < spectra.size(); ++c)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                out += std::to_string(c) + "," + std::to_string(i) + "," + std::to_string(j) + "," +
                       format_double(spectra[c](i, j)) + "\n";
    atomic_write_file(path, out);
}

} // namespace convspect
