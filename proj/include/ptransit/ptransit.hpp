// ptransit umbrella header
#pragma once

#include <ptransit/core.hpp>
#include <ptransit/integrate.hpp>
#include <ptransit/lagrange.hpp>
#include <ptransit/models.hpp>
#include <ptransit/porbit.hpp>
#include <ptransit/symmap.hpp>
#include <ptransit/transit.hpp>
