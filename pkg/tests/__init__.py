from . import test_basics

