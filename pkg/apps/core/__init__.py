# Core app initialization