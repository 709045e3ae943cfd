# Config package initialization