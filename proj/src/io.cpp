#include "hcd/io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "binio.hpp"

namespace hcd {
namespace {

constexpr char kNpyMagic[] = "\x93NUMPY";

void write_npy_raw(const std::string& path, const std::vector<float>& data,
                   const std::vector<std::size_t>& shape) {
    std::ostringstream dict;
    dict << "{'descr': '<f4', 'fortran_order': False, 'shape': (";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        dict << shape[i];
        if (shape.size() == 1 || i + 1 < shape.size()) dict << ",";
        if (i + 1 < shape.size()) dict << " ";
    }
    dict << "), }";
    std::string header = dict.str();
    const std::size_t base = 6 + 2 + 2;  // magic + version + header length
    const std::size_t padded = ((base + header.size() + 1 + 63) / 64) * 64;
    header.append(padded - base - header.size() - 1, ' ');
    header.push_back('\n');

    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os.write(kNpyMagic, 6);
    binio::write_pod<std::uint8_t>(os, 1);
    binio::write_pod<std::uint8_t>(os, 0);
    binio::write_pod<std::uint16_t>(os, std::uint16_t(header.size()));
    os << header;
    os.write(reinterpret_cast<const char*>(data.data()),
             std::streamsize(data.size() * sizeof(float)));
    if (!os) throw std::runtime_error("write failed: " + path);
}

std::vector<float> read_npy_raw(const std::string& path, std::vector<std::size_t>& shape) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    char magic[6];
    is.read(magic, 6);
    if (!is || std::memcmp(magic, kNpyMagic, 6) != 0)
        throw std::runtime_error(path + ": not an NPY file (bad magic)");
    const auto ver_major = binio::read_pod<std::uint8_t>(is);
    binio::read_pod<std::uint8_t>(is);
    if (ver_major != 1) throw std::runtime_error(path + ": unsupported NPY version");
    const auto header_len = binio::read_pod<std::uint16_t>(is);
    std::string header(header_len, '\0');
    is.read(header.data(), header_len);
    if (!is) throw std::runtime_error(path + ": truncated header");

    if (header.find("'<f4'") == std::string::npos)
        throw std::runtime_error(path + ": dtype must be little-endian float32 ('<f4')");
    if (header.find("'fortran_order': False") == std::string::npos)
        throw std::runtime_error(path + ": fortran_order must be False");

    const auto open = header.find('(');
    const auto close = header.find(')', open);
    if (open == std::string::npos || close == std::string::npos)
        throw std::runtime_error(path + ": malformed shape");
    shape.clear();
    std::stringstream ss(header.substr(open + 1, close - open - 1));
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (tok.find_first_of("0123456789") != std::string::npos)
            shape.push_back(std::stoull(tok));

    std::size_t count = 1;
    for (std::size_t s : shape) count *= s;
    std::vector<float> data(count);
    is.read(reinterpret_cast<char*>(data.data()), std::streamsize(count * sizeof(float)));
    if (!is) throw std::runtime_error(path + ": truncated data");
    return data;
}

}  // namespace

void write_npy(const std::string& path, const ImageStack& image) {
    std::vector<float> data(image.data.begin(), image.data.end());
    write_npy_raw(path, data,
                  {std::size_t(image.height), std::size_t(image.width),
                   std::size_t(image.channels)});
}

void write_npy(const std::string& path, const ChangeScores& scores) {
    std::vector<float> data(scores.values.begin(), scores.values.end());
    write_npy_raw(path, data, {std::size_t(scores.height), std::size_t(scores.width)});
}

ImageStack read_npy_image(const std::string& path) {
    std::vector<std::size_t> shape;
    const auto data = read_npy_raw(path, shape);
    if (shape.size() != 3)
        throw std::runtime_error(path + ": expected rank-3 array (n1, n2, C)");
    ImageStack img{int(shape[0]), int(shape[1]), int(shape[2])};
    std::copy(data.begin(), data.end(), img.data.begin());
    img.validate();
    return img;
}

ChangeScores read_npy_scores(const std::string& path, ScoreKind kind) {
    std::vector<std::size_t> shape;
    const auto data = read_npy_raw(path, shape);
    if (shape.size() != 2)
        throw std::runtime_error(path + ": expected rank-2 array (n1, n2)");
    ChangeScores scores{int(shape[0]), int(shape[1]), kind};
    std::copy(data.begin(), data.end(), scores.values.begin());
    return scores;
}

std::vector<std::uint8_t> read_npy_mask(const std::string& path, int& n1, int& n2) {
    const ChangeScores raw = read_npy_scores(path, ScoreKind::possibility);
    n1 = raw.height;
    n2 = raw.width;
    std::vector<std::uint8_t> mask(raw.size());
    for (std::size_t n = 0; n < raw.size(); ++n) mask[n] = raw.values[n] != 0.0f ? 1 : 0;
    return mask;
}

void write_npy_mask(const std::string& path, const std::vector<std::uint8_t>& mask,
                    int n1, int n2) {
    std::vector<float> data(mask.size());
    for (std::size_t n = 0; n < mask.size(); ++n) data[n] = mask[n] ? 1.0f : 0.0f;
    write_npy_raw(path, data, {std::size_t(n1), std::size_t(n2)});
}

void write_png_mask(const std::string& path, const std::vector<std::uint8_t>& map,
                    int n1, int n2) {
    if (map.size() != std::size_t(n1) * n2)
        throw std::invalid_argument("write_png_mask: size mismatch");
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw std::runtime_error("cannot open for writing: " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw std::runtime_error("png write failed: " + path);
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, png_uint_32(n2), png_uint_32(n1), 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<std::uint8_t> row(n2);
    for (int r = 0; r < n1; ++r) {
        for (int c = 0; c < n2; ++c) row[c] = map[std::size_t(r) * n2 + c] ? 255 : 0;
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

std::vector<std::uint8_t> read_png_mask(const std::string& path, int& n1, int& n2) {
    std::FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw std::runtime_error("cannot open: " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw std::runtime_error("png read failed: " + path);
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    if (png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY)
        png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    png_read_update_info(png, info);
    n1 = int(png_get_image_height(png, info));
    n2 = int(png_get_image_width(png, info));
    std::vector<std::uint8_t> out(std::size_t(n1) * n2);
    std::vector<std::uint8_t> row(png_get_rowbytes(png, info));
    for (int r = 0; r < n1; ++r) {
        png_read_row(png, row.data(), nullptr);
        for (int c = 0; c < n2; ++c)
            out[std::size_t(r) * n2 + c] = row[c] >= 128 ? 1 : 0;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    return out;
}

static constexpr const char kTrainMagic[] = "HCDT1";

void write_training_set(const std::string& path, const TrainingSet& ts) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os.write(kTrainMagic, 5);
    binio::write_pod<std::uint64_t>(os, ts.size());
    binio::write_pod<std::uint32_t>(os, std::uint32_t(ts.dim_x()));
    binio::write_pod<std::uint32_t>(os, std::uint32_t(ts.dim_y()));
    for (const auto& pair : ts.pairs) {
        binio::write_pod<std::uint64_t>(os, pair.pixel);
        for (double v : pair.x) binio::write_pod<double>(os, v);
        for (double v : pair.y) binio::write_pod<double>(os, v);
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

TrainingSet read_training_set(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    binio::expect_magic(is, kTrainMagic, "training set");
    const auto m = binio::read_pod<std::uint64_t>(is);
    const auto p = binio::read_pod<std::uint32_t>(is);
    const auto q = binio::read_pod<std::uint32_t>(is);
    TrainingSet ts;
    ts.pairs.resize(m);
    for (auto& pair : ts.pairs) {
        pair.pixel = binio::read_pod<std::uint64_t>(is);
        pair.x.resize(p);
        for (double& v : pair.x) v = binio::read_pod<double>(is);
        pair.y.resize(q);
        for (double& v : pair.y) v = binio::read_pod<double>(is);
    }
    return ts;
}

}  // namespace hcd
