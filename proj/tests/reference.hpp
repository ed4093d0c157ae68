#pragma once

// Maps a library IndicatorKind onto the from-definition oracles.

#include "oracles.hpp"
#include "quantenv/indicators.hpp"

namespace oracle {

using namespace quantenv;

std::vector<oracle::Ohlcv> ohlcv(const BarSeries& s) {
    std::vector<oracle::Ohlcv> out;
    for (const auto& b : s.bars()) out.push_back({b.high, b.low, b.close, double(b.volume)});
    return out;
}

oracle::Series reference(const IndicatorKind& k, const BarSeries& s) {
    const auto b = ohlcv(s);
    const auto& p = k.params;
    auto u = [&](std::size_t i) { return std::size_t(p[i]); };
    switch (k.tag) {
        case IndicatorTag::SMA: return oracle::sma(b, u(0));
        case IndicatorTag::EMA: return oracle::ema(b, u(0));
        case IndicatorTag::VWMA: return oracle::vwma(b, u(0));
        case IndicatorTag::RSI: return oracle::rsi(b, u(0));
        case IndicatorTag::STOCH: return oracle::stoch(b, u(0), u(1), u(2));
        case IndicatorTag::CCI: return oracle::cci(b, u(0));
        case IndicatorTag::BBANDS: return oracle::bbands(b, u(0), p[1]);
        case IndicatorTag::ATR: return oracle::atr(b, u(0));
        case IndicatorTag::OBV: return oracle::obv(b);
        case IndicatorTag::CMF: return oracle::cmf(b, u(0));
        case IndicatorTag::MACD: return oracle::macd(b, u(0), u(1), u(2));
    }
    return {};
}

}  // namespace oracle
