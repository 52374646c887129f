#pragma once

#include "ehpc/units.hpp"
#include "ehpc/channel.hpp"
#include "ehpc/power_control.hpp"
#include "ehpc/engine.hpp"
#include "ehpc/oracle.hpp"
#include "ehpc/io.hpp"
