#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "quantenv/quantenv.hpp"

namespace testing_support {

using namespace quantenv;
namespace fs = std::filesystem;

inline fs::path fixtures() { return fs::path(QUANTENV_FIXTURES); }
inline fs::path corpus_dir() { return fixtures() / "corpus"; }

inline std::shared_ptr<const Corpus> fixture_corpus() {
    static const auto corpus = std::make_shared<const Corpus>(Corpus::load(corpus_dir()));
    return corpus;
}

inline Date D(const char* s) { return *Date::parse(s); }

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        std::random_device rd;
        path_ = fs::temp_directory_path() /
                ("quantenv-test-" + std::to_string(rd()) + "-" + std::to_string(++counter));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const fs::path& path() const { return path_; }
    fs::path write(const std::string& name, const std::string& content) const {
        const auto p = path_ / name;
        fs::create_directories(p.parent_path());
        std::ofstream(p, std::ios::binary) << content;
        return p;
    }

private:
    fs::path path_;
};

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

/// Random walk of valid bars on weekdays starting at `first`.
inline std::vector<Bar> random_bars(std::mt19937_64& rng, std::size_t n, Date first = Date::from_ymd(2024, 1, 2),
                                    double start = 100.0) {
    std::normal_distribution<double> step(0.0, 0.015);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<std::int64_t> vol(1000, 5'000'000);
    std::vector<Bar> out;
    double close = start;
    Date d = first;
    while (out.size() < n) {
        if (d.is_weekend()) {
            d = d.plus_days(1);
            continue;
        }
        const double open = close * (1.0 + step(rng) * 0.5);
        close = close * (1.0 + step(rng));
        const double high = std::max(open, close) * (1.0 + 0.01 * u(rng));
        const double low = std::min(open, close) * (1.0 - 0.01 * u(rng));
        out.push_back(Bar{d, open, high, low, close, close * 0.99, vol(rng)});
        d = d.plus_days(1);
    }
    return out;
}

inline BarSeries random_series(std::mt19937_64& rng, std::size_t n, std::string symbol = "RND",
                               Date first = Date::from_ymd(2024, 1, 2)) {
    return BarSeries(std::move(symbol), random_bars(rng, n, first));
}

inline BarSeries constant_series(std::size_t n, double price = 100.0, std::string symbol = "CONST") {
    std::vector<Bar> bars;
    Date d = Date::from_ymd(2024, 1, 1);
    while (bars.size() < n) {
        if (!d.is_weekend()) bars.push_back(Bar{d, price, price, price, price, price, 1'000'000});
        d = d.plus_days(1);
    }
    return BarSeries(std::move(symbol), std::move(bars));
}

inline BarSeries series_from_closes(const std::vector<double>& closes, std::string symbol = "SYN") {
    std::vector<Bar> bars;
    Date d = Date::from_ymd(2024, 1, 1);
    for (double c : closes) {
        while (d.is_weekend()) d = d.plus_days(1);
        bars.push_back(Bar{d, c, c, c, c, c, 1'000'000});
        d = d.plus_days(1);
    }
    return BarSeries(std::move(symbol), std::move(bars));
}

inline bool rel_close(double a, double b, double tol) {
    if (a == b) return true;
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

/// Every YYYY-MM-DD token in `text`.
inline std::vector<Date> dates_in(const std::string& text) {
    std::vector<Date> out;
    for (std::size_t i = 0; i + 10 <= text.size(); ++i) {
        if (auto d = Date::parse(std::string_view(text).substr(i, 10))) {
            out.push_back(*d);
            i += 9;
        }
    }
    return out;
}

}  // namespace testing_support
