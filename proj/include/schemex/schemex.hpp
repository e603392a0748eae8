#pragma once

#include "schemex/checkpoint.hpp"
#include "schemex/config.hpp"
#include "schemex/data.hpp"
#include "schemex/decode.hpp"
#include "schemex/engine.hpp"
#include "schemex/error.hpp"
#include "schemex/metrics.hpp"
#include "schemex/model.hpp"
#include "schemex/optim.hpp"
#include "schemex/query.hpp"
#include "schemex/records.hpp"
#include "schemex/schema.hpp"
#include "schemex/scores.hpp"
#include "schemex/tokenize.hpp"
#include "schemex/train.hpp"
