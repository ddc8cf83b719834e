#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "fsoda/core/error.hpp"
#include "fsoda/core/tensor.hpp"

namespace fsoda {

/// Bit-exact binary container for named tensors. Little-endian IEEE-754
/// doubles; save -> load round-trips are byte-identical.
class TensorFile {
public:
    void put(const std::string& name, const Tensor& t) { entries_[name] = t; }

    const Tensor& get(const std::string& name) const {
        auto it = entries_.find(name);
        if (it == entries_.end()) throw DataError("checkpoint: missing tensor '" + name + "'");
        return it->second;
    }
    bool contains(const std::string& name) const { return entries_.count(name) != 0; }
    size_t count() const { return entries_.size(); }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw DataError("cannot write " + path);
        out.write(kMagic, 8);
        write_u64(out, entries_.size());
        for (const auto& [name, t] : entries_) {
            write_u64(out, name.size());
            out.write(name.data(), static_cast<std::streamsize>(name.size()));
            write_u64(out, static_cast<uint64_t>(t.rows()));
            write_u64(out, static_cast<uint64_t>(t.cols()));
            out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
        }
        if (!out) throw DataError("write failed: " + path);
    }

    static TensorFile load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw DataError("cannot read " + path);
        char magic[8];
        in.read(magic, 8);
        if (!in || std::memcmp(magic, kMagic, 8) != 0) throw DataError("bad tensor file header: " + path);
        TensorFile tf;
        const uint64_t n = read_u64(in);
        for (uint64_t i = 0; i < n; ++i) {
            const uint64_t name_len = read_u64(in);
            std::string name(name_len, '\0');
            in.read(name.data(), static_cast<std::streamsize>(name_len));
            const int rows = static_cast<int>(read_u64(in));
            const int cols = static_cast<int>(read_u64(in));
            Tensor t(rows, cols);
            in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
            if (!in) throw DataError("truncated tensor file: " + path);
            tf.entries_[name] = std::move(t);
        }
        return tf;
    }

private:
    static constexpr const char kMagic[9] = "FSODAT1\n";

    static void write_u64(std::ofstream& out, uint64_t v) {
        char buf[8];
        for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
        out.write(buf, 8);
    }
    static uint64_t read_u64(std::ifstream& in) {
        unsigned char buf[8];
        in.read(reinterpret_cast<char*>(buf), 8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(buf[i]) << (8 * i);
        return v;
    }

    std::map<std::string, Tensor> entries_;
};

}  // namespace fsoda
