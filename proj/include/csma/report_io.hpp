#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "csma/analytics.hpp"
#include "csma/constellation.hpp"
#include "csma/error.hpp"
#include "csma/harness.hpp"

namespace csma {

/// Locale-independent %.{precision}g.
inline std::string format_number(double v, int precision = 12)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, precision);
    return std::string(buf, res.ptr);
}

inline constexpr const char* report_csv_header =
    "snr_db,snr_mode,user_id,symbols_sent,symbol_errors,ser,data_bits_sent,data_bit_errors,ber,"
    "user_confusions,theory_ser,theory_ber";

inline void write_report_rows(std::ostream& os, const BerReport& report)
{
    for (const auto& r : report.rows) {
        os << format_number(r.snr_db) << ',' << to_string(r.snr_mode) << ',' << r.user_id << ',' << r.symbols_sent
           << ',' << r.symbol_errors << ',' << format_number(r.ser()) << ',' << r.data_bits_sent << ','
           << r.data_bit_errors << ',' << format_number(r.ber()) << ',' << r.user_confusions << ','
           << format_number(r.theory_ser) << ',' << format_number(r.theory_ber) << '\n';
    }
}

/**
 * One header line, then the rows. With several reports each block is
 * introduced by a `# run: <name>` comment line.
 */
inline void write_report_csv(std::ostream& os, const std::vector<BerReport>& reports)
{
    os << report_csv_header << '\n';
    for (const auto& rep : reports) {
        if (reports.size() > 1)
            os << "# run: " << rep.name << '\n';
        write_report_rows(os, rep);
    }
}

inline std::string report_csv_string(const std::vector<BerReport>& reports)
{
    std::ostringstream os;
    write_report_csv(os, reports);
    return os.str();
}

inline void write_theory_csv(std::ostream& os, const TheoryCurve& curve)
{
    os << "snr_db,ps\n";
    for (std::size_t i = 0; i < curve.snr_db.size(); ++i)
        os << format_number(curve.snr_db[i]) << ',' << format_number(curve.values[i]) << '\n';
}

/// Writes through a sibling temp file and renames, so readers never see a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error(ErrorCode::io, "cannot open " + tmp.string() + " for writing");
        out << contents;
        out.flush();
        if (!out) {
            out.close();
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw Error(ErrorCode::io, "failed writing " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorCode::io, "cannot move output into place at " + path.string());
    }
}

/// gnuplot script plotting per-user and aggregate BER from a report CSV.
inline std::string gnuplot_script(const std::string& csv_path, const std::vector<BerReport>& reports)
{
    std::ostringstream os;
    os << "set datafile separator ','\nset logscale y\nset xlabel 'SNR (dB)'\nset ylabel 'BER'\nset grid\n"
       << "set key outside\n";
    // `every` counts data lines only: the header is line 0 and comment lines are skipped.
    os << "plot ";
    bool first = true;
    std::size_t line = 1;
    for (const auto& rep : reports) {
        const std::size_t stride = rep.users.size() + 1;
        const std::size_t begin = line + rep.users.size();
        const std::size_t end = line + rep.rows.size() - 1;
        if (!first)
            os << ", \\\n     ";
        first = false;
        os << "'" << csv_path << "' every " << stride << "::" << begin << "::" << end
           << " using 1:9 with linespoints title '" << rep.name << " sim', '" << csv_path << "' every " << stride
           << "::" << begin << "::" << end << " using 1:12 with lines dashtype 2 title '" << rep.name << " theory'";
        line += rep.rows.size();
    }
    os << '\n';
    return os.str();
}

} // namespace csma
