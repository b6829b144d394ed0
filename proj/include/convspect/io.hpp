#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>

#include "convspect/conv.hpp"
#include "convspect/oracle.hpp"
#include "convspect/search.hpp"
#include "convspect/tensor.hpp"

namespace convspect {

/// CSPT binary tensor: magic "CSPT", u32 version = 1, u32 channels, u32 n,
/// then channels*n*n little-endian float64, channel-major row-major.
/// write/read round-trips bit-exactly.
void write_tensor(const std::string& path, const RealTensor& x);
RealTensor read_tensor(const std::string& path);

enum class ImageFormat { PgmP5, PpmP6, Raw8 };

/// 8-bit binary PGM (P5, 1 channel) / PPM (P6, 3 channels), maxval 255, or
/// headerless Raw8 bytes (any channel count, channel-major row-major).
/// Read maps v -> v/255; write maps v -> round(255 v) and requires values
/// in [0, 1]. Round-trip error is bounded by 1/510 per pixel.
void write_image(const std::string& path, const RealTensor& x, ImageFormat format);
RealTensor read_image(const std::string& path);

/// Raw8 carries no header, so the shape comes from the caller.
RealTensor read_raw8(const std::string& path, int channels, int n);

/// Detects .cspt vs PGM/PPM from the file's magic bytes.
RealTensor read_tensor_or_image(const std::string& path);

/// Grayscale render of an arbitrary real grid: linear min/max scale to
/// [0, 255] (constant grids render as 0). `centered` applies the fftshift
/// layout used for frequency-indexed grids.
void write_rendered_pgm(const std::string& path, const Eigen::MatrixXd& grid, bool centered = false);

/// Network description document (JSON): layers with out/in/k/stride, flat
/// weights in (o, c, dy, dx) order, optional per-channel norm scales; a skip
/// flag and optional seed provenance. Parse errors carry field context.
std::string network_to_json(const NetworkSpec& net, std::uint64_t seed = 0);
NetworkSpec network_from_json(const std::string& text);
void write_network(const std::string& path, const NetworkSpec& net, std::uint64_t seed = 0);
NetworkSpec read_network(const std::string& path);

/// Toy model document (JSON), kind "toy-cnn" or "toy-mlp".
std::unique_ptr<Oracle> oracle_from_json(const std::string& text);
std::unique_ptr<Oracle> read_oracle_spec(const std::string& path);
std::string toy_cnn_to_json(const ToyCnnSpec& spec);
std::string toy_mlp_to_json(const ToyMlpSpec& spec);

/// CSV emitters. Every file starts with a provenance header:
///   # convspect <version> <kind>
///   # key=value ...
/// Data rows follow the documented schema; all grids are corner-DC indexed.
void write_heatmap_csv(const std::string& path, const FoolHeatmap& hm);
void write_response_csv(const std::string& path, const ResponseMap& map);
void write_spectrum_csv(const std::string& path,
                        const std::vector<std::pair<double, Frequency>>& spectrum, int n,
                        const std::string& source_desc, size_t top_k = 0);
void write_analysis_csv(const std::string& path, const std::vector<Eigen::MatrixXd>& spectra,
                        const std::string& source_desc);

/// Writes via a temp file in the same directory plus rename, so readers
/// never observe a partial file.
void atomic_write_file(const std::string& path, const std::string& contents);

} // namespace convspect
