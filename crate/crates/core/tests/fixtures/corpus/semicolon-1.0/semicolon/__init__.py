import os;;
