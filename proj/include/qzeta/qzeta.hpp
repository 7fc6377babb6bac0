#pragma once

#include "qzeta/constants.hpp"
#include "qzeta/delta_series.hpp"
#include "qzeta/eps_series.hpp"
#include "qzeta/errors.hpp"
#include "qzeta/rational.hpp"
#include "qzeta/real.hpp"
#include "qzeta/regularize.hpp"
#include "qzeta/renorm.hpp"
#include "qzeta/serialize.hpp"
#include "qzeta/tpoly.hpp"
#include "qzeta/word.hpp"
