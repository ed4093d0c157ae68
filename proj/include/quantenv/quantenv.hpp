#pragma once

#include "quantenv/action.hpp"
#include "quantenv/backtest.hpp"
#include "quantenv/bars.hpp"
#include "quantenv/baselines.hpp"
#include "quantenv/config.hpp"
#include "quantenv/corpus.hpp"
#include "quantenv/date.hpp"
#include "quantenv/env.hpp"
#include "quantenv/error.hpp"
#include "quantenv/indicators.hpp"
#include "quantenv/reward.hpp"
#include "quantenv/service.hpp"
#include "quantenv/tools.hpp"
