#pragma once

// Plain CSV / JSON output with a checksummed inventory.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <boost/crc.hpp>
#include <json.hpp>

#include "semiff/config.hpp"
#include "semiff/error.hpp"

namespace semiff {

inline constexpr const char* version_tag = "semiff 1.0.0";

/// Fixed four-decimal time label used in file names.
inline std::string time_label(double t)
{
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << t;
    return s.str();
}

inline std::uint32_t crc32(const std::string& bytes)
{
    boost::crc_32_type crc;
    crc.process_bytes(bytes.data(), bytes.size());
    return crc.checksum();
}

inline std::string hex32(std::uint32_t x)
{
    std::ostringstream s;
    s << std::hex << std::setw(8) << std::setfill('0') << x;
    return s.str();
}

/// Row-wise CSV builder; numbers at 17 significant digits.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> columns) : width_(columns.size())
    {
        out_.precision(17);
        for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
        out_ << '\n';
    }

    template <class... Xs>
    void row(const Xs&... xs)
    {
        if (sizeof...(xs) != width_) throw Error("CsvTable: row width mismatch");
        std::size_t i = 0;
        ((out_ << (i++ ? "," : "") << xs), ...);
        out_ << '\n';
    }

    std::string str() const { return out_.str(); }

private:
    std::size_t width_;
    std::ostringstream out_;
};

/// Writes files under one directory and records their checksums.
class OutputWriter {
public:
    explicit OutputWriter(std::filesystem::path dir) : dir_(std::move(dir))
    {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw ConfigError("cannot create output directory '" + dir_.string() + "': " + ec.message());
    }

    const std::filesystem::path& dir() const { return dir_; }

    void write(const std::string& name, const std::string& bytes) { write(name, bytes, crc32(bytes)); }

    /// `checksum` may cover a canonical subset of the bytes (see write_summary).
    void write(const std::string& name, const std::string& bytes, std::uint32_t checksum, std::string covers = {})
    {
        const auto path = dir_ / name;
        std::ofstream f(path, std::ios::binary);
        if (!f) throw Error("cannot write '" + path.string() + "'");
        f << bytes;
        if (!f) throw Error("write failed for '" + path.string() + "'");
        files_[name] = {checksum, bytes.size(), std::move(covers)};
    }

    void write_csv(const std::string& name, const CsvTable& table) { write(name, table.str()); }
    void write_json(const std::string& name, const nlohmann::json& j) { write(name, j.dump(2) + "\n"); }

    /// summary.json; runtime_seconds is excluded from the checksum so that
    /// reruns compare equal.
    void write_summary(const nlohmann::json& j)
    {
        nlohmann::json stable = j;
        stable.erase("runtime_seconds");
        write("summary.json", j.dump(2) + "\n", crc32(stable.dump(2) + "\n"), "all keys except runtime_seconds");
    }

    void write_manifest(const RunConfig& cfg, const std::string& command,
                        std::chrono::system_clock::time_point started)
    {
        nlohmann::json m;
        m["version"] = version_tag;
        m["command"] = command;
        m["config"] = cfg.echo();
        m["started"] = stamp(started);
        m["finished"] = stamp(std::chrono::system_clock::now());
        nlohmann::json files = nlohmann::json::object();
        for (const auto& [name, info] : files_) {
            files[name] = {{"crc32", hex32(info.checksum)}, {"bytes", info.bytes}};
            if (!info.covers.empty()) files[name]["crc32_covers"] = info.covers;
        }
        m["files"] = files;
        const std::string bytes = m.dump(2) + "\n";
        std::ofstream f(dir_ / "manifest.json", std::ios::binary);
        f << bytes;
        if (!f) throw Error("cannot write manifest.json");
    }

    std::map<std::string, std::uint32_t> checksums() const
    {
        std::map<std::string, std::uint32_t> out;
        for (const auto& [name, info] : files_) out[name] = info.checksum;
        return out;
    }

private:
    static std::string stamp(std::chrono::system_clock::time_point tp)
    {
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(tp.time_since_epoch()).count();
        return std::to_string(secs);
    }

    struct Info {
        std::uint32_t checksum;
        std::size_t bytes;
        std::string covers;
    };
    std::filesystem::path dir_;
    std::map<std::string, Info> files_;
};

/// Minimal reader for numeric CSV with a header line.
struct CsvData {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const
    {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return i;
        throw ConfigError("CSV column '" + name + "' not found");
    }
};

inline CsvData read_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path.string() + "'");
    CsvData d;
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("'" + path.string() + "' is empty");
    {
        std::stringstream s(line);
        std::string cell;
        while (std::getline(s, cell, ',')) d.columns.push_back(detail::trim(cell));
    }
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        std::stringstream s(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(s, cell, ',')) row.push_back(detail::parse_number<double>(path.string(), detail::trim(cell)));
        if (row.size() != d.columns.size()) throw ConfigError("'" + path.string() + "': ragged row");
        d.rows.push_back(std::move(row));
    }
    return d;
}

}  // namespace semiff
