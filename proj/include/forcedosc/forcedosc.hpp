#pragma once

#include "forcedosc/commands.hpp"
#include "forcedosc/config.hpp"
#include "forcedosc/dynamics.hpp"
#include "forcedosc/errors.hpp"
#include "forcedosc/expression.hpp"
#include "forcedosc/geometry.hpp"
#include "forcedosc/hypotheses.hpp"
#include "forcedosc/io.hpp"
#include "forcedosc/orbit.hpp"
#include "forcedosc/sampling.hpp"
#include "forcedosc/systems.hpp"
#include "forcedosc/topology.hpp"
