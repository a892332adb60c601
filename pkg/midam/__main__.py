# coding: utf-8

from midam.cli import main

if __name__ == "__main__":
    main()
