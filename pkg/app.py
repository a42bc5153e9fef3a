"""
relcull command-line application
"""

from src.relcull.cli.main import main

if __name__ == "__main__":
    main()
