#pragma once

#include "lifecurve/calendar.hpp"
#include "lifecurve/dist.hpp"
#include "lifecurve/entropy.hpp"
#include "lifecurve/error.hpp"
#include "lifecurve/fit.hpp"
#include "lifecurve/genmodel.hpp"
#include "lifecurve/ingestion.hpp"
#include "lifecurve/io.hpp"
#include "lifecurve/lifepath.hpp"
#include "lifecurve/rng.hpp"
#include "lifecurve/series.hpp"
#include "lifecurve/validate.hpp"
