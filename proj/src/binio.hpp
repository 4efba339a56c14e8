#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

// Little-endian binary primitives for model blobs and training-set files.
namespace hcd::binio {

template <typename T>
void write_pod(std::ostream& os, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T value{};
    is.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!is) throw std::runtime_error("binio: truncated stream");
    return value;
}

inline void write_matrix(std::ostream& os, const Eigen::MatrixXd& m) {
    write_pod<std::uint64_t>(os, std::uint64_t(m.rows()));
    write_pod<std::uint64_t>(os, std::uint64_t(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) write_pod<double>(os, m(r, c));
}

inline Eigen::MatrixXd read_matrix(std::istream& is) {
    const auto rows = read_pod<std::uint64_t>(is);
    const auto cols = read_pod<std::uint64_t>(is);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(Eigen::Index(rows), Eigen::Index(cols));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = read_pod<double>(is);
    return m;
}

inline void write_vector(std::ostream& os, const Eigen::VectorXd& v) {
    write_pod<std::uint64_t>(os, std::uint64_t(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) write_pod<double>(os, v(i));
}

inline Eigen::VectorXd read_vector(std::istream& is) {
    const auto n = read_pod<std::uint64_t>(is);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(Eigen::Index(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = read_pod<double>(is);
    return v;
}

inline void expect_magic(std::istream& is, const std::string& magic, const char* what) {
    std::string got(magic.size(), '\0');
    is.read(got.data(), std::streamsize(magic.size()));
    if (!is || got != magic)
        throw std::runtime_error(std::string(what) + ": bad magic");
}

}  // namespace hcd::binio
