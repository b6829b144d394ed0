#include "convspect/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <csignal>
#include <iostream>

#include "convspect/io.hpp"
#include "convspect/perturb.hpp"
#include "convspect/remote.hpp"
#include "convspect/search.hpp"
#include "convspect/spectra.hpp"
#include "convspect/version.hpp"

namespace convspect {

namespace {

std::unique_ptr<Oracle> open_oracle(const std::string& spec) {
    if (spec.rfind("tcp://", 0) == 0) return connect_remote_oracle(spec);
    return read_oracle_spec(spec);
}

int oracle_channels(const Oracle& oracle, int flag_value) {
    if (flag_value > 0) return flag_value;
    const int known = oracle.input_channels();
    return known > 0 ? known : 3;
}

// 0.5-centered quantization used for pattern images: round(255*(0.5 + p/(2*eps))).
RealTensor pattern_to_gray(const Perturbation& p) {
    RealTensor img(1, p.n);
    for (int y = 0; y < p.n; ++y)
        for (int x = 0; x < p.n; ++x) {
            const double q = p.epsilon > 0.0 ? 0.5 + p.pattern(y, x) / (2.0 * p.epsilon) : 0.5;
            img.at(0, y, x) = std::clamp(q, 0.0, 1.0);
        }
    return img;
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"convspect: exact conv-stack spectra, single-frequency attacks, "
                 "and black-box frequency search"};
    app.set_version_flag("--version", CONVSPECT_VERSION);
    app.require_subcommand(1);

    // ---- spectra ----
    std::string sp_network, sp_out;
    int sp_n = 0;
    std::size_t sp_top = 0;
    auto* sp = app.add_subcommand("spectra", "Singular-value spectrum of a network file");
    sp->add_option("network", sp_network, "network JSON file")->required();
    sp->add_option("--n", sp_n, "grid size")->required();
    sp->add_option("--top", sp_top, "keep only the top K entries");
    sp->add_option("--out", sp_out, "output CSV")->required();

    // ---- sfa ----
    int sfa_n = 0, sfa_i = 0, sfa_j = 0;
    double sfa_eps = 0.0;
    bool sfa_signed = false;
    std::string sfa_out, sfa_pgm;
    auto* sf = app.add_subcommand("sfa", "Emit a single-frequency perturbation pattern");
    sf->add_option("--n", sfa_n, "grid size")->required();
    sf->add_option("--i", sfa_i, "row frequency")->required();
    sf->add_option("--j", sfa_j, "column frequency")->required();
    sf->add_option("--eps", sfa_eps, "l-infinity size")->required();
    sf->add_flag("--signed", sfa_signed, "signed (sign-of-pattern) variant");
    sf->add_option("--out", sfa_out, "output pattern (.cspt)")->required();
    sf->add_option("--png-like", sfa_pgm, "also render as 8-bit PGM");

    // ---- attack ----
    std::string at_image, at_out;
    int at_i = 0, at_j = 0;
    double at_eps = 0.0;
    bool at_signed = false;
    auto* at = app.add_subcommand("attack", "Perturb one image at a fixed frequency");
    at->add_option("--image", at_image, "input image (P5/P6)")->required();
    at->add_option("--i", at_i, "row frequency")->required();
    at->add_option("--j", at_j, "column frequency")->required();
    at->add_option("--eps", at_eps, "l-infinity size")->required();
    at->add_flag("--signed", at_signed, "signed variant");
    at->add_option("--out", at_out, "output image")->required();

    // ---- heatmap ----
    std::string hm_oracle, hm_out, hm_render;
    int hm_n = 0, hm_batch = 64, hm_channels = 0;
    double hm_eps = 0.0;
    std::uint64_t hm_seed = 0;
    bool hm_signed = false, hm_centered = false;
    auto* hm = app.add_subcommand("heatmap", "Fool-ratio heatmap over all frequencies");
    hm->add_option("--oracle", hm_oracle, "toy model JSON or tcp://host:port")->required();
    hm->add_option("--n", hm_n, "grid size")->required();
    hm->add_option("--eps", hm_eps, "l-infinity size")->required();
    hm->add_option("--batch", hm_batch, "batch size (default 64)");
    hm->add_option("--seed", hm_seed, "batch seed")->required();
    hm->add_flag("--signed", hm_signed, "signed variant");
    hm->add_option("--channels", hm_channels, "input channels (default: oracle's, else 3)");
    hm->add_option("--out", hm_out, "output CSV")->required();
    hm->add_option("--render", hm_render, "also render as 8-bit PGM");
    hm->add_flag("--centered", hm_centered, "render with DC at the center");

    // ---- search ----
    std::string se_oracle;
    int se_n = 0, se_batch = 64, se_channels = 0;
    double se_eps = 0.0;
    std::uint64_t se_seed = 0, se_budget = 0;
    bool se_signed = false;
    auto* se = app.add_subcommand("search", "Budgeted black-box frequency search");
    se->add_option("--oracle", se_oracle, "toy model JSON or tcp://host:port")->required();
    se->add_option("--n", se_n, "grid size")->required();
    se->add_option("--eps", se_eps, "l-infinity size")->required();
    se->add_option("--budget", se_budget, "max frequency evaluations")->required();
    se->add_option("--seed", se_seed, "batch + restart seed")->required();
    se->add_option("--batch", se_batch, "batch size (default 64)");
    se->add_flag("--signed", se_signed, "signed variant");
    se->add_option("--channels", se_channels, "input channels (default: oracle's, else 3)");

    // ---- analyze ----
    std::string an_image, an_out, an_render;
    bool an_centered = false;
    auto* an = app.add_subcommand("analyze", "Log-magnitude spectrum of a perturbation image");
    an->add_option("--image", an_image, "input image (P5/P6) or tensor (.cspt)")->required();
    an->add_option("--out", an_out, "output CSV")->required();
    an->add_option("--render", an_render, "also render as 8-bit PGM");
    an->add_flag("--centered", an_centered, "place DC at the center");

    // ---- respond ----
    std::string re_network, re_out;
    int re_n = 0, re_layer = 0;
    auto* re = app.add_subcommand("respond", "Per-frequency response magnitude of one layer");
    re->add_option("--kernel", re_network, "network JSON file")->required();
    re->add_option("--layer", re_layer, "layer index within the file (default 0)");
    re->add_option("--n", re_n, "grid size")->required();
    re->add_option("--out", re_out, "output CSV")->required();

    // ---- matched ----
    int ma_i = 0, ma_j = 0, ma_k = 0, ma_n = 0;
    std::string ma_out;
    auto* ma = app.add_subcommand("matched", "Emit the matched kernel for one frequency");
    ma->add_option("--i", ma_i, "row frequency")->required();
    ma->add_option("--j", ma_j, "column frequency")->required();
    ma->add_option("--k", ma_k, "kernel size")->required();
    ma->add_option("--n", ma_n, "grid size")->required();
    ma->add_option("--out", ma_out, "output network JSON")->required();

    // ---- oracle-serve ----
    std::string os_spec, os_listen;
    auto* osrv = app.add_subcommand("oracle-serve", "Serve a toy model over the wire protocol");
    osrv->add_option("--spec", os_spec, "toy model JSON")->required();
    osrv->add_option("--listen", os_listen, "listen address host:port")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (sp->parsed()) {
            const NetworkSpec net = read_network(sp_network);
            const auto spectrum = full_spectrum(net, sp_n);
            write_spectrum_csv(sp_out, spectrum, sp_n, sp_network, sp_top);
        } else if (sf->parsed()) {
            const Frequency f{sfa_i, sfa_j, sfa_n};
            const Perturbation p =
                sfa_signed ? ssfa_pattern(sfa_n, f, sfa_eps) : sfa_pattern(sfa_n, f, sfa_eps);
            RealTensor t(1, sfa_n);
            for (int y = 0; y < sfa_n; ++y)
                for (int x = 0; x < sfa_n; ++x) t.at(0, y, x) = p.pattern(y, x);
            write_tensor(sfa_out, t);
            if (!sfa_pgm.empty()) write_image(sfa_pgm, pattern_to_gray(p), ImageFormat::PgmP5);
        } else if (at->parsed()) {
            const RealTensor img = read_image(at_image);
            const Frequency f{at_i, at_j, img.n};
            const Perturbation p =
                at_signed ? ssfa_pattern(img.n, f, at_eps) : sfa_pattern(img.n, f, at_eps);
            const RealTensor out = apply_perturbation(img, p);
            write_image(at_out, out, img.channels == 1 ? ImageFormat::PgmP5 : ImageFormat::PpmP6);
        } else if (hm->parsed()) {
            auto oracle = open_oracle(hm_oracle);
            const int channels = oracle_channels(*oracle, hm_channels);
            const auto batch =
                synthetic_batch(hm_seed, hm_n, channels, hm_batch, BatchGenerator::Uniform);
            const FoolHeatmap heat = fool_heatmap(*oracle, batch, hm_n, hm_eps, hm_signed, hm_seed);
            write_heatmap_csv(hm_out, heat);
            if (!hm_render.empty()) write_rendered_pgm(hm_render, heat.values, hm_centered);
        } else if (se->parsed()) {
            auto oracle = open_oracle(se_oracle);
            const int channels = oracle_channels(*oracle, se_channels);
            const auto batch =
                synthetic_batch(se_seed, se_n, channels, se_batch, BatchGenerator::Uniform);
            const SearchResult r =
                local_search(*oracle, batch, se_n, se_eps, se_budget, se_seed, se_signed);
            std::cout << "frequency " << r.freq.i << " " << r.freq.j << "\n"
                      << "fool_ratio " << r.ratio << "\n"
                      << "evaluations " << r.evaluations << "\n"
                      << "oracle_queries " << r.oracle_queries << "\n";
        } else if (an->parsed()) {
            const RealTensor img = read_tensor_or_image(an_image);
            const auto spectra = perturbation_spectrum(img, an_centered);
            write_analysis_csv(an_out, spectra, an_image);
            if (!an_render.empty()) {
                Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(img.n, img.n);
                for (const auto& s : spectra) mean += s;
                mean /= static_cast<double>(spectra.size());
                // spectra already carry the requested layout
                write_rendered_pgm(an_render, mean, false);
            }
        } else if (re->parsed()) {
            const NetworkSpec net = read_network(re_network);
            if (re_layer < 0 || re_layer >= static_cast<int>(net.layers.size()))
                throw ContractError("respond: layer index out of range");
            const ConvLayer folded = fold_normalization(net.layers[static_cast<size_t>(re_layer)]);
            if (folded.stride != 1) throw ContractError("respond: stride-1 layers only");
            const ResponseMap map = kernel_response_map(folded.kernel, re_n);
            write_response_csv(re_out, map);
        } else if (ma->parsed()) {
            const ConvKernel kernel = matched_kernel({ma_i, ma_j, ma_n}, ma_k, ma_n);
            NetworkSpec net;
            ConvLayer layer;
            layer.kernel = kernel;
            net.layers.push_back(std::move(layer));
            write_network(ma_out, net);
        } else if (osrv->parsed()) {
            auto oracle = read_oracle_spec(os_spec);
            OracleServer server(*oracle);
            const int port = server.start(os_listen);
            std::cout << "serving " << oracle->descriptor() << " on port " << port << std::endl;
            // foreground until interrupted
            static volatile std::sig_atomic_t stop_requested = 0;
            std::signal(SIGINT, [](int) { stop_requested = 1; });
            std::signal(SIGTERM, [](int) { stop_requested = 1; });
            while (!stop_requested) {
                timespec ts{0, 100 * 1000 * 1000};
                nanosleep(&ts, nullptr);
            }
            server.stop();
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
    return 0;
}

} // namespace convspect
