#!/usr/bin/env python3

import sys
import os
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from src.core.app import QuasiLabApp

if __name__ == '__main__':
    sys.exit(QuasiLabApp().run())
