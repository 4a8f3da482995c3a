#pragma once

#include "geonet/continuation.hpp"
#include "geonet/experiments.hpp"
#include "geonet/io.hpp"
#include "geonet/surgery.hpp"
